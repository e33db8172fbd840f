#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <smjls/linalg.hpp>
#include <smjls/model.hpp>

namespace smjls {

inline constexpr double kPdTol = 1e-10;

/// W(i,X) = I - B'XB - D'D failed to be positive definite. Along a Riccati
/// recursion this means the system is not strictly contractive on that window.
class NotContractiveAtHorizon : public std::runtime_error {
public:
    NotContractiveAtHorizon(int mode, int time, double eigenvalue);
    int mode() const { return mode_; }
    /// Recursion time index, or -1 outside of a recursion.
    int time() const { return time_; }
    double eigenvalue() const { return eigenvalue_; }

private:
    int mode_;
    int time_;
    double eigenvalue_;
};

/// sum_j pi_ij(s) Xs[j].
SymMatrix blend(const SystemDef& sys, int i, int s, const std::vector<SymMatrix>& Xs);

Matrix op_L(const SystemDef& sys, int i, const SymMatrix& X);  // A'XA + C'C
Matrix op_R(const SystemDef& sys, int i, const SymMatrix& X);  // B'XA + D'C
Matrix op_W(const SystemDef& sys, int i, const SymMatrix& X);  // I - B'XB - D'D

/// [[L, R'], [R, -W]].
SymMatrix op_M(const SystemDef& sys, int i, const SymMatrix& X);

/// M(i,X) - diag(Y, 0).
SymMatrix op_B(const SystemDef& sys, int i, const SymMatrix& X, const SymMatrix& Y);

/// W(i,X) with its Cholesky factor; throws NotContractiveAtHorizon when the
/// minimum eigenvalue of W is <= pd_tol.
class WFactor {
public:
    WFactor(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol = kPdTol);
    const Matrix& W() const { return W_; }
    double min_eigenvalue() const { return min_eig_; }
    Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }

private:
    Matrix W_;
    double min_eig_;
    Eigen::LLT<Matrix> llt_;
};

/// L + R' W^{-1} R.
SymMatrix op_S(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol = kPdTol);

/// A + B W^{-1} R.
Matrix op_F(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol = kPdTol);

/// The gain that attains S: w = W^{-1} R x.
Matrix worst_input_gain(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol = kPdTol);

/// Copy of sys with C and D divided by gamma.
SystemDef scaled_output(const SystemDef& sys, double gamma);

}  // namespace smjls
