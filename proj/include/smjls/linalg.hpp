#pragma once

#include <Eigen/Dense>

namespace smjls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-12;

/// Square symmetric matrix. The stored value is always exactly symmetric:
/// construction averages the input with its transpose.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);
    static SymMatrix zero(Eigen::Index n);
    static SymMatrix identity(Eigen::Index n, double scale = 1.0);

    const Matrix& mat() const { return m_; }
    Eigen::Index size() const { return m_.rows(); }

    double min_eigenvalue() const;
    double max_eigenvalue() const;

    SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(m_ + o.m_); }
    SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(m_ - o.m_); }
    SymMatrix operator*(double s) const { return SymMatrix(m_ * s); }

    bool operator==(const SymMatrix& o) const { return m_ == o.m_; }

private:
    Matrix m_;
};

Matrix symmetrized(const Matrix& m);

/// Eigenvalues of a symmetric matrix in ascending order.
Vector sym_eigenvalues(const Matrix& m);
double min_sym_eigenvalue(const Matrix& m);
double max_sym_eigenvalue(const Matrix& m);

}  // namespace smjls
