#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <smjls/linalg.hpp>
#include <smjls/model.hpp>
#include <smjls/sdp.hpp>
#include <smjls/switching.hpp>

namespace smjls {

enum class LmiKind { Stability, Brl };

const char* to_string(LmiKind k);
LmiKind parse_lmi_kind(const std::string& s);

inline constexpr double kDefaultMarginThreshold = 1e-7;
inline constexpr double kDefaultXCap = 1e6;
inline constexpr double kBrlRetryNormalization = 1e-6;
inline constexpr double kDefaultMarginCap = 1.0;

/// Index of a path-dependent matrix: (mode, window).
using VariableKey = std::pair<int, Word>;

/// The system violates a standing hypothesis of the requested analysis.
class HypothesisViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The conic backend broke down while solving the problem for window length M.
class SolverFailureError : public std::runtime_error {
public:
    SolverFailureError(int M, const std::string& reason)
        : std::runtime_error("solver failure at M=" + std::to_string(M) + ": " + reason), M_(M) {}
    int M() const { return M_; }

private:
    int M_;
};

/// The gain search could not bracket a certified bound: no stability
/// certificate at the window, or the BRL is infeasible even at gamma_max.
class GainBoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One constraint block, indexed by (mode, w) with w in Psi_{M+1}.
struct BlockDescriptor {
    int mode;
    Word word;                    // length M+1
    int head;                     // w[0]
    int prefix_var;               // index of X(mode, prefix)
    std::vector<int> suffix_vars; // index of X(j, suffix) for every mode j
};

/// Path-dependent LMI family together with its normalization and margin
/// bounds. `sys` is the system the blocks are built from; for a BRL at a gain
/// gamma it is the output-scaled copy.
struct LmiProblem {
    LmiKind kind = LmiKind::Stability;
    int M = 0;
    double gamma = 1.0;
    double normalization = 1.0;   // X >= normalization * I
    double x_cap = kDefaultXCap;  // X <= x_cap * I
    double margin_cap = kDefaultMarginCap;
    SystemDef sys;
    std::vector<VariableKey> variables;
    std::map<VariableKey, int> variable_index;
    std::vector<BlockDescriptor> blocks;

    int num_variables() const { return static_cast<int>(variables.size()); }
    int num_blocks() const { return static_cast<int>(blocks.size()); }
    Eigen::Index state_dim() const { return sys.state_dim(); }
    Eigen::Index block_dim() const;

    /// Value of block b at the given variable assignment (indexed like
    /// `variables`). Blocks are affine in X.
    SymMatrix evaluate_block(int b, const std::vector<SymMatrix>& X) const;
};

LmiProblem build_stability_lmi(const SystemDef& sys, int M);

/// Throws HypothesisViolation when the positivity hypothesis fails.
LmiProblem build_brl_lmi(const SystemDef& sys, int M, std::optional<double> gamma = std::nullopt);

LmiProblem build_lmi(const SystemDef& sys, LmiKind kind, int M, std::optional<double> gamma = std::nullopt);

/// Translates to maximize t s.t. every block <= -tI, normalization*I <= X <= x_cap*I, t <= margin_cap.
sdp::Problem to_sdp(const LmiProblem& prob);

struct SolverInfo {
    std::string backend;
    std::string status;
    int iterations = 0;
    double t_star = 0.0;
    double relative_gap = 0.0;
};

struct Certificate {
    LmiKind kind = LmiKind::Stability;
    int M = 0;
    std::map<VariableKey, SymMatrix> X;
    double margin = kDefaultMarginThreshold;  // threshold the certificate was accepted with
    double eta = 0.0;                         // min eigenvalue over all X
    double rho = 0.0;                         // max eigenvalue over all X
    double nu = 0.0;                          // -(max block eigenvalue)
    double c = 0.0;
    double lambda = 0.0;
    std::optional<double> gamma;
    /// For BRL certificates: -(max eigenvalue of the leading n x n stability blocks).
    std::optional<double> stability_nu;
    double normalization = 1.0;
    SolverInfo solver;
};

struct FeasibilityOutcome {
    enum class Kind { Feasible, Infeasible, SolverFailure };
    Kind kind = Kind::SolverFailure;
    std::optional<Certificate> certificate;
    double best_t = 0.0;        // achieved margin of the last attempt
    double normalization = 1.0; // normalization of the last attempt
    std::string reason;

    bool feasible() const { return kind == Kind::Feasible; }
};

const char* to_string(FeasibilityOutcome::Kind k);

struct FeasibilityOptions {
    double margin_threshold = kDefaultMarginThreshold;
    /// For BRL problems: retry with X >= kBrlRetryNormalization * I when the
    /// X >= I attempt does not reach the threshold.
    bool brl_retry = true;
    std::shared_ptr<const sdp::Backend> backend;  // default backend when null
};

FeasibilityOutcome solve_feasibility(const LmiProblem& prob, const FeasibilityOptions& opts = {});

/// Builds the certificate for an assignment X of prob's variables.
Certificate make_certificate(const LmiProblem& prob, const std::vector<SymMatrix>& X, double margin);

struct WindowRecord {
    int M;
    FeasibilityOutcome::Kind outcome;
    double best_t;
    double normalization;
};

struct CertifyResult {
    std::optional<Certificate> certificate;
    std::vector<WindowRecord> records;
    /// True when no window up to max_M worked and the switching structure is
    /// homogeneous, where M=0 infeasibility already settles the question.
    bool conclusive_negative = false;

    bool found() const { return certificate.has_value(); }
};

/// Tries M = 0..max_M in order. Throws SolverFailureError (carrying M) on
/// backend breakdown and HypothesisViolation for BRL without positivity.
CertifyResult certify(const SystemDef& sys, LmiKind kind, int max_M,
                      const FeasibilityOptions& opts = {});

struct VerificationReport {
    bool passed = false;
    double max_block_eigenvalue = 0.0;
    int worst_mode = -1;
    Word worst_word;
    double min_x_eigenvalue = 0.0;
    double eta = 0.0, rho = 0.0, nu = 0.0, c = 0.0, lambda = 0.0;
    std::optional<double> stability_nu;
    std::string message;
};

/// Re-evaluates every block with plain linear algebra. Throws
/// std::invalid_argument when the certificate does not index N x Psi_M.
VerificationReport verify_certificate(const SystemDef& sys, const Certificate& cert);

/// Orders cert.X like prob.variables; throws std::invalid_argument on mismatch.
std::vector<SymMatrix> assignment_for(const LmiProblem& prob, const Certificate& cert);

struct GainOptions {
    double tol = 1e-3;
    double gamma_max = 1e3;
    double gamma_floor = 1e-9;
    FeasibilityOptions feasibility;
};

struct GainResult {
    double gamma_hat;
    Certificate certificate;  // BRL certificate at gamma_hat
    int probes;
};

/// Smallest gamma (to within tol) such that the BRL at window M is feasible
/// for the output-scaled system; returns the certified upper endpoint.
GainResult gain_bisection(const SystemDef& sys, int M, const GainOptions& opts = {});

}  // namespace smjls
