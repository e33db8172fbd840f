#pragma once

#include <map>
#include <optional>
#include <vector>

#include <smjls/lmi.hpp>
#include <smjls/model.hpp>
#include <smjls/operators.hpp>
#include <smjls/switching.hpp>

namespace smjls {

/// Backward solution of the (perturbed) finite-horizon Riccati recursion
///
///     X(i,k) = S(i, sum_j pi_ij(psi(k+1)) X(j,k+1)) + eps I,   X(i,T+1) = 0,
///
/// along one switching window window[k] = psi(k+1), k = 0..T.
struct RiccatiSolution {
    Word window;
    int T = 0;
    double epsilon = 0.0;
    /// X[k][i] for k = 0..T+1.
    std::vector<std::vector<SymMatrix>> X;
    /// Smallest eigenvalue of W(i, blended X(.,k+1)) over all (i,k).
    double w_min_eig = 0.0;

    const SymMatrix& at(int mode, int k) const { return X[static_cast<std::size_t>(k)][static_cast<std::size_t>(mode)]; }
};

/// `window` must have T+1 symbols and be admissible. Throws
/// NotContractiveAtHorizon(mode, k, eig) when W loses positive definiteness.
/// The last symbol psi(T+1) only multiplies X(.,T+1) = 0 and so never matters.
RiccatiSolution riccati_backward(const SystemDef& sys, const Word& window, int T, double epsilon,
                                 double pd_tol = kPdTol);

/// Y(i, word) = X(i, 0) of the eps-perturbed recursion with horizon M driven
/// by the M symbols of `word`, read oldest first as psi(1..M).
SymMatrix finite_memory_storage(const SystemDef& sys, int mode, const Word& word, int M, double epsilon,
                                double pd_tol = kPdTol);

struct DissipationReport {
    double worst_max_eigenvalue = 0.0;
    double nu = 0.0;  // -worst_max_eigenvalue
    int worst_mode = -1;
    Word worst_word;  // element of Psi_{M+1}
    int blocks_checked = 0;
    bool passed() const { return nu > 0.0; }
};

/// Max eigenvalue of B(i, sum_j pi_ij(head) Y(j, suffix), Y(i, prefix)) over
/// all (i, w) in N x Psi_{M+1}. Throws std::invalid_argument when Y misses an
/// index.
DissipationReport check_dissipation(const SystemDef& sys, const std::map<VariableKey, SymMatrix>& Y, int M);

struct StorageFamily {
    std::map<VariableKey, SymMatrix> Y;
    double epsilon = 0.0;  // value that was finally used
    int attempts = 0;
    DissipationReport report;
    bool passed() const { return report.passed(); }
};

/// Evaluates finite_memory_storage on N x Psi_M and checks dissipation,
/// dividing eps by 10 after each failed attempt (at most max_retries times).
/// The last family is returned whether or not it passed.
StorageFamily build_storage_family(const SystemDef& sys, int M, double epsilon = 1e-3, int max_retries = 4,
                                   double pd_tol = kPdTol);

/// max |X_psi(i,t,T) - X_{psi_t}(i,0,T-t)| over modes and entries, where
/// psi_t is the window shifted left by t.
double shift_invariance_check(const SystemDef& sys, const Word& window, int T, int t, double epsilon,
                              double pd_tol = kPdTol);

}  // namespace smjls
