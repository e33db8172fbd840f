#include <smjls/linalg.hpp>

#include <Eigen/Eigenvalues>

namespace smjls {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SymMatrix::SymMatrix(const Matrix& m) : m_(symmetrized(m)) {}

SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::identity(Eigen::Index n, double scale) {
    return SymMatrix(scale * Matrix::Identity(n, n));
}

double SymMatrix::min_eigenvalue() const { return min_sym_eigenvalue(m_); }
double SymMatrix::max_eigenvalue() const { return max_sym_eigenvalue(m_); }

Vector sym_eigenvalues(const Matrix& m) {
    if (m.size() == 0) return Vector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double min_sym_eigenvalue(const Matrix& m) { return sym_eigenvalues(m).minCoeff(); }
double max_sym_eigenvalue(const Matrix& m) { return sym_eigenvalues(m).maxCoeff(); }

}  // namespace smjls
