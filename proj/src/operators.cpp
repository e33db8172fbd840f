#include <smjls/operators.hpp>

#include <sstream>

namespace smjls {

namespace {

std::string not_contractive_message(int mode, int time, double eig) {
    std::ostringstream os;
    os << "W(i,X) not positive definite for mode " << mode + 1;
    if (time >= 0) os << " at time " << time;
    os << " (min eigenvalue " << eig << ")";
    return os.str();
}

const ModeMatrices& mode_of(const SystemDef& sys, int i) {
    if (i < 0 || i >= sys.num_modes()) throw std::out_of_range("mode index out of range");
    return sys.modes[static_cast<std::size_t>(i)];
}

}  // namespace

NotContractiveAtHorizon::NotContractiveAtHorizon(int mode, int time, double eigenvalue)
    : std::runtime_error(not_contractive_message(mode, time, eigenvalue)),
      mode_(mode),
      time_(time),
      eigenvalue_(eigenvalue) {}

SymMatrix blend(const SystemDef& sys, int i, int s, const std::vector<SymMatrix>& Xs) {
    const int N = sys.num_modes();
    if (static_cast<int>(Xs.size()) != N) {
        throw std::invalid_argument("blend: expected one matrix per mode, got " +
                                    std::to_string(Xs.size()));
    }
    Matrix acc = Matrix::Zero(Xs[0].size(), Xs[0].size());
    for (int j = 0; j < N; ++j) {
        const double p = sys.transitions.prob(s, i, j);
        if (p != 0.0) acc += p * Xs[static_cast<std::size_t>(j)].mat();
    }
    return SymMatrix(acc);
}

Matrix op_L(const SystemDef& sys, int i, const SymMatrix& X) {
    const auto& m = mode_of(sys, i);
    return symmetrized(m.A.transpose() * X.mat() * m.A + m.C.transpose() * m.C);
}

Matrix op_R(const SystemDef& sys, int i, const SymMatrix& X) {
    const auto& m = mode_of(sys, i);
    return m.B.transpose() * X.mat() * m.A + m.D.transpose() * m.C;
}

Matrix op_W(const SystemDef& sys, int i, const SymMatrix& X) {
    const auto& m = mode_of(sys, i);
    const auto k = m.B.cols();
    return symmetrized(Matrix::Identity(k, k) - m.B.transpose() * X.mat() * m.B - m.D.transpose() * m.D);
}

SymMatrix op_M(const SystemDef& sys, int i, const SymMatrix& X) {
    const auto n = sys.state_dim(), k = sys.input_dim();
    Matrix out(n + k, n + k);
    const Matrix R = op_R(sys, i, X);
    out.topLeftCorner(n, n) = op_L(sys, i, X);
    out.topRightCorner(n, k) = R.transpose();
    out.bottomLeftCorner(k, n) = R;
    out.bottomRightCorner(k, k) = -op_W(sys, i, X);
    return SymMatrix(out);
}

SymMatrix op_B(const SystemDef& sys, int i, const SymMatrix& X, const SymMatrix& Y) {
    Matrix out = op_M(sys, i, X).mat();
    const auto n = sys.state_dim();
    if (Y.size() != n) throw std::invalid_argument("op_B: Y has the wrong size");
    out.topLeftCorner(n, n) -= Y.mat();
    return SymMatrix(out);
}

WFactor::WFactor(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol)
    : W_(op_W(sys, i, X)) {
    min_eig_ = W_.size() ? min_sym_eigenvalue(W_) : 1.0;
    if (!(min_eig_ > pd_tol)) throw NotContractiveAtHorizon(i, -1, min_eig_);
    llt_.compute(W_);
}

SymMatrix op_S(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol) {
    const WFactor w(sys, i, X, pd_tol);
    const Matrix R = op_R(sys, i, X);
    return SymMatrix(op_L(sys, i, X) + R.transpose() * w.solve(R));
}

Matrix op_F(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol) {
    const auto& m = mode_of(sys, i);
    return m.A + m.B * worst_input_gain(sys, i, X, pd_tol);
}

Matrix worst_input_gain(const SystemDef& sys, int i, const SymMatrix& X, double pd_tol) {
    const WFactor w(sys, i, X, pd_tol);
    return w.solve(op_R(sys, i, X));
}

SystemDef scaled_output(const SystemDef& sys, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gain scaling requires gamma > 0");
    SystemDef out = sys;
    for (auto& m : out.modes) {
        m.C /= gamma;
        m.D /= gamma;
    }
    return out;
}

}  // namespace smjls
