#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <smjls/analysis.hpp>
#include <smjls/lmi.hpp>
#include <smjls/riccati.hpp>

namespace smjls::testing {

/// Sum over k = 0..T of E[z'z - w'w] with w(k) = W^{-1} R x(k) built from the
/// Riccati solution, by explicit enumeration of every mode path theta(0..T)
/// weighted by p0 and the transition products.
inline double enumerated_energy(const SystemDef& sys, const RiccatiSolution& sol, const Vector& x0) {
    const int N = sys.num_modes();
    const int T = sol.T;
    const Eigen::Index n = sys.state_dim(), m = sys.input_dim();
    const Vector p0 = sys.initial_distribution();
    long long paths = 1;
    for (int k = 0; k <= T; ++k) paths *= N;
    double total = 0.0;
    std::vector<int> theta(static_cast<std::size_t>(T + 1));
    for (long long code = 0; code < paths; ++code) {
        long long c = code;
        for (int k = 0; k <= T; ++k) {
            theta[static_cast<std::size_t>(k)] = static_cast<int>(c % N);
            c /= N;
        }
        double weight = p0(theta[0]);
        for (int k = 0; k < T && weight != 0.0; ++k) {
            weight *= sys.transitions.prob(sol.window[static_cast<std::size_t>(k)], theta[static_cast<std::size_t>(k)],
                                           theta[static_cast<std::size_t>(k + 1)]);
        }
        if (weight == 0.0) continue;
        Vector x = x0;
        double energy = 0.0;
        for (int k = 0; k <= T; ++k) {
            const int i = theta[static_cast<std::size_t>(k)];
            const ModeMatrices& mm = sys.modes[static_cast<std::size_t>(i)];
            Matrix Xt = Matrix::Zero(n, n);
            for (int j = 0; j < N; ++j)
                Xt += sys.transitions.prob(sol.window[static_cast<std::size_t>(k)], i, j) * sol.at(j, k + 1).mat();
            const Matrix W = Matrix::Identity(m, m) - mm.B.transpose() * Xt * mm.B - mm.D.transpose() * mm.D;
            const Matrix R = mm.B.transpose() * Xt * mm.A + mm.D.transpose() * mm.C;
            const Vector w = W.ldlt().solve(R * x);
            const Vector z = mm.C * x + mm.D * w;
            energy += z.squaredNorm() - w.squaredNorm();
            x = mm.A * x + mm.B * w;
        }
        total += weight * energy;
    }
    return total;
}

/// E[x0' X(theta(0), 0) x0] with theta(0) ~ p0.
inline double storage_energy(const SystemDef& sys, const RiccatiSolution& sol, const Vector& x0) {
    const Vector p0 = sys.initial_distribution();
    double v = 0.0;
    for (int i = 0; i < sys.num_modes(); ++i) v += p0(i) * x0.dot(sol.at(i, 0).mat() * x0);
    return v;
}

struct SoundnessResult {
    int windows = 0;
    /// max over windows, modes and k of lambda_max(H(i,k)) / (c lambda^k).
    double worst_ratio = 0.0;
    bool holds(double slack = 1e-6) const { return worst_ratio <= 1.0 + slack; }
};

/// Periodic windows of period <= 3 plus `walks` seeded random walks, each of
/// length K, checked against c lambda^k.
inline SoundnessResult certificate_soundness(const SystemDef& sys, double c, double lambda, int K, int walks,
                                             std::uint64_t seed) {
    std::vector<Word> windows;
    for (const Word& u : periodic_windows(sys.switching, sys.num_symbols(), 3)) windows.push_back(repeat_to_length(u, K));
    std::mt19937_64 rng(seed);
    for (int r = 0; r < walks; ++r) windows.push_back(random_admissible_word(sys.switching, sys.num_symbols(), K, rng));
    SoundnessResult out;
    for (const Word& w : windows) {
        const SecondMomentTable H = exact_second_moment(sys, w);
        for (int k = 0; k <= K; ++k) {
            const double bound = c * std::pow(lambda, k);
            for (int i = 0; i < sys.num_modes(); ++i)
                out.worst_ratio = std::max(out.worst_ratio, max_sym_eigenvalue(H.at(i, k)) / bound);
        }
        ++out.windows;
    }
    return out;
}

}  // namespace smjls::testing
