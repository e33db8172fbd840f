#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include <smjls/lmi.hpp>
#include <smjls/model.hpp>
#include <smjls/switching.hpp>

namespace smjls {

inline constexpr int kMaxExactHorizon = 10000;
inline constexpr int kMaxBruteForceHorizon = 8;

/// H(i,k) = E[Phi(k,0)' Phi(k,0) | theta(0) = i] along a fixed window, with
/// Phi(k,0) = A(theta(k-1)) ... A(theta(0)) and theta(k) -> theta(k+1)
/// drawn from Pi(window[k]).
struct SecondMomentTable {
    Word window;
    /// H[k][i], k = 0..K.
    std::vector<std::vector<Matrix>> H;

    int horizon() const { return static_cast<int>(H.size()) - 1; }
    const Matrix& at(int mode, int k) const { return H[static_cast<std::size_t>(k)][static_cast<std::size_t>(mode)]; }
    double max_eigenvalue(int k) const;  // max over modes
};

/// Exact backward recursion, all modes at once. Requires K = |window| <= 1e4.
SecondMomentTable exact_second_moment(const SystemDef& sys, const Word& window);

/// Enumerates all N^K mode paths; |window| <= 8.
Matrix brute_force_second_moment(const SystemDef& sys, const Word& window, int mode);

/// Q[k][i] = E[x(k) x(k)' 1{theta(k) = i}] for the unforced system, from
/// Q[0] forward along the window (k = 0..|window|).
std::vector<std::vector<Matrix>> mode_covariances(const SystemDef& sys, const Word& window,
                                                   const std::vector<Matrix>& Q0);

/// E[V(k)] = sum_i tr(X(i, window[k..k+M-1]) Q[k][i]) for k = 0..|window|-M.
std::vector<double> expected_lyapunov(const Certificate& cert, const Word& window,
                                      const std::vector<std::vector<Matrix>>& Q);

/// Both sides of the worst-case energy identity on a window of T+1 symbols:
/// the path-enumerated sum over k = 0..T of E[z'z - w'w] with the input
/// w(k) = W^{-1} R x(k) built from the eps = 0 Riccati solution, against
/// E[x0' X(theta(0), 0) x0] with theta(0) ~ p0.
struct EnergyIdentity {
    double path_sum;
    double storage_value;
    double residual() const;
};
EnergyIdentity worst_case_energy(const SystemDef& sys, const Word& window, int T, const Vector& x0);

// --- simulation ---------------------------------------------------------

/// Seeds for trial `index` of a run seeded with `seed`; independent of how
/// trials are scheduled over threads.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

struct ZeroInput {};
struct WhiteNoiseInput {
    double sigma = 1.0;
};
struct CustomInput {
    std::vector<Vector> w;  // w(0..T)
};
using InputSpec = std::variant<ZeroInput, WhiteNoiseInput, CustomInput>;

struct FixedState {
    Vector x0;
};
/// x0 uniform on the unit sphere.
struct UnitSphereState {};
/// x0 = e_k with k uniform over the coordinates.
struct IndicatorState {};
using InitialState = std::variant<FixedState, UnitSphereState, IndicatorState>;

struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<int> modes;    // theta(0..T)
    std::vector<Vector> x;     // x(0..T+1)
    std::vector<Vector> z;     // z(0..T)
    std::vector<Vector> w;     // w(0..T)

    int horizon() const { return static_cast<int>(modes.size()) - 1; }
    /// max |x(k+1) - A x(k) - B w(k)| and |z(k) - C x(k) - D w(k)|.
    double residual(const SystemDef& sys) const;
};

/// Simulates T+1 steps; theta(0) ~ p0 and theta(k) -> theta(k+1) drawn from
/// Pi(window[k]). The window must hold at least T symbols.
Trajectory simulate(const SystemDef& sys, const Word& window, int T, const InputSpec& input,
                    const InitialState& x0, std::uint64_t seed);

/// One row per step: k, mode, x_1..x_n, z_1..z_p, w_1..w_m (modes 1-based).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// How each trial obtains its switching window.
struct FixedWindow {
    Word base;  // repeated to the required length
};
struct RandomWalkWindow {};
using WindowPolicy = std::variant<FixedWindow, RandomWalkWindow>;

struct MonteCarloOptions {
    int trials = 1000;
    int horizon = 100;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct DecayEstimate {
    double c_hat = 0.0;
    double lambda_hat = 0.0;
    double lambda_se = 0.0;  // delta-method standard error of lambda_hat
    double lambda_lo = 0.0;  // 95% band
    double lambda_hi = 0.0;
    std::vector<double> mean_square;  // sample mean of |x(k)|^2, k = 0..T
    int points_used = 0;
    bool degenerate = false;
};

/// Fits log(mean |x(k)|^2) = log c + k log lambda over the unforced runs with
/// x0 uniform on the unit sphere. Needs trials >= 100.
DecayEstimate estimate_decay(const SystemDef& sys, const WindowPolicy& policy, const MonteCarloOptions& opts);

/// Least-squares fit of log y(k) against k, exposing the fitting step.
DecayEstimate fit_decay(const std::vector<double>& mean_square);

/// sum_i p0_i tr(H(i,k)) / n: the exact counterpart of mean_square.
std::vector<double> exact_mean_square(const SystemDef& sys, const Word& window);

struct GainEstimate {
    double mean = 0.0;            // mean over trials of sum|z|^2 / sum|w|^2
    double standard_error = 0.0;
    int trials = 0;
};

/// Zero initial state, white-noise input of intensity sigma.
GainEstimate estimate_gain(const SystemDef& sys, const WindowPolicy& policy, const MonteCarloOptions& opts,
                           double sigma = 1.0);

struct DecayConstants {
    double c;
    double lambda;
    bool weak;  // lambda within 1e-6 of 1
};

/// c = rho/eta and lambda = 1 - nu/rho, with the stability margin of a BRL
/// certificate. Throws std::invalid_argument when that margin is missing.
DecayConstants decay_constants(const Certificate& cert);

}  // namespace smjls
