#include <smjls/sdp.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace smjls::sdp {

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Inaccurate: return "inaccurate";
        case Status::Failure: return "failure";
    }
    return "?";
}

std::vector<Matrix> Problem::slack(const Vector& y) const {
    std::vector<Matrix> S = C;
    for (int k = 0; k < num_variables(); ++k) {
        if (y(k) == 0.0) continue;
        for (const auto& e : A[static_cast<std::size_t>(k)]) S[e.block] -= y(k) * e.coeff;
    }
    return S;
}

namespace {

using Blocks = std::vector<Matrix>;

double inner(const Blocks& X, const Blocks& Y) {
    double s = 0.0;
    for (std::size_t b = 0; b < X.size(); ++b) s += (X[b].array() * Y[b].array()).sum();
    return s;
}

double frobenius(const Blocks& X) { return std::sqrt(inner(X, X)); }

// Largest step alpha <= 1 / fraction with X + alpha dX positive semidefinite.
double max_step(const Blocks& X, const Blocks& dX) {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < X.size(); ++b) {
        Eigen::LLT<Matrix> llt(X[b]);
        if (llt.info() != Eigen::Success) return 0.0;
        const auto L = llt.matrixL();
        Matrix T = L.solve(dX[b]);
        T = L.solve(T.transpose()).transpose();
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (T + T.transpose()),
                                                                  Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .minCoeff();
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    }
    return alpha;
}

class Solver {
public:
    Solver(const Problem& p, const Options& o) : p_(p), o_(o) {
        nb_ = p_.block_sizes.size();
        m_ = p_.num_variables();
        if (p_.C.size() != nb_) throw std::invalid_argument("sdp: one constant matrix per block");
        if (p_.b.size() != m_) throw std::invalid_argument("sdp: objective size mismatch");
        per_block_.resize(nb_);
        for (int k = 0; k < m_; ++k) {
            for (const auto& e : p_.A[static_cast<std::size_t>(k)]) {
                if (e.block < 0 || static_cast<std::size_t>(e.block) >= nb_ ||
                    e.coeff.rows() != p_.block_sizes[e.block] || e.coeff.cols() != p_.block_sizes[e.block]) {
                    throw std::invalid_argument("sdp: malformed coefficient block");
                }
                per_block_[e.block].push_back({k, &e.coeff});
            }
        }
        for (int s : p_.block_sizes) total_dim_ += s;
    }

    Result run() {
        initialize();
        Result res;
        const double norm_b = p_.b.norm();
        double norm_c = 0.0;
        for (const auto& c : p_.C) norm_c += c.squaredNorm();
        norm_c = std::sqrt(norm_c);

        for (int iter = 0; iter <= o_.max_iterations; ++iter) {
            const Vector rp = p_.b - apply_A(Z_);
            Blocks Rd = dual_residual();
            res.primal_objective = inner(p_.C, Z_);
            res.dual_objective = p_.b.dot(y_);
            res.relative_gap = std::abs(res.primal_objective - res.dual_objective) /
                               (1.0 + std::abs(res.primal_objective) + std::abs(res.dual_objective));
            res.primal_infeasibility = rp.norm() / (1.0 + norm_b);
            res.dual_infeasibility = frobenius(Rd) / (1.0 + norm_c);
            res.iterations = iter;
            res.y = y_;
            const double err =
                std::max({res.relative_gap, res.primal_infeasibility, res.dual_infeasibility});
            if (err < o_.tolerance) {
                res.status = Status::Optimal;
                res.message = "converged";
                return res;
            }
            if (iter == o_.max_iterations) break;
            if (!step(rp, Rd)) {
                res.status = err < o_.inaccurate_tolerance ? Status::Inaccurate : Status::Failure;
                res.message = "step failed to make progress";
                return res;
            }
        }
        const double err =
            std::max({res.relative_gap, res.primal_infeasibility, res.dual_infeasibility});
        res.status = err < o_.inaccurate_tolerance ? Status::Inaccurate : Status::Failure;
        res.message = "iteration limit reached";
        return res;
    }

private:
    struct Ref {
        int var;
        const Matrix* coeff;
    };

    void initialize() {
        y_ = p_.y0 ? *p_.y0 : Vector::Zero(m_);
        S_ = p_.slack(y_);
        bool slack_pd = p_.y0.has_value();
        for (const auto& s : S_) {
            if (Eigen::LLT<Matrix>(s).info() != Eigen::Success) slack_pd = false;
        }
        double scale = 1.0;
        for (const auto& c : p_.C) scale = std::max(scale, c.cwiseAbs().maxCoeff());
        for (const auto& list : p_.A) {
            for (const auto& e : list) scale = std::max(scale, e.coeff.cwiseAbs().maxCoeff());
        }
        if (!slack_pd) {
            for (std::size_t b = 0; b < nb_; ++b) {
                S_[b] = 10.0 * scale * Matrix::Identity(p_.block_sizes[b], p_.block_sizes[b]);
            }
        }
        double zeta = std::max(1.0, 10.0 * p_.b.cwiseAbs().maxCoeff());
        Z_.resize(nb_);
        for (std::size_t b = 0; b < nb_; ++b) {
            Z_[b] = zeta * Matrix::Identity(p_.block_sizes[b], p_.block_sizes[b]);
        }
    }

    Vector apply_A(const Blocks& X) const {
        Vector out = Vector::Zero(m_);
        for (std::size_t b = 0; b < nb_; ++b) {
            for (const auto& r : per_block_[b]) out(r.var) += (r.coeff->array() * X[b].array()).sum();
        }
        return out;
    }

    Blocks apply_At(const Vector& y) const {
        Blocks out(nb_);
        for (std::size_t b = 0; b < nb_; ++b) {
            out[b] = Matrix::Zero(p_.block_sizes[b], p_.block_sizes[b]);
            for (const auto& r : per_block_[b]) out[b] += y(r.var) * *r.coeff;
        }
        return out;
    }

    Blocks dual_residual() const {
        Blocks At = apply_At(y_);
        Blocks R(nb_);
        for (std::size_t b = 0; b < nb_; ++b) R[b] = p_.C[b] - At[b] - S_[b];
        return R;
    }

    // Solves for (dy, dS, dZ) given the complementarity target
    // dZ = sigma_mu S^{-1} - Z - Z dS S^{-1} - corr.
    void direction(const Vector& rp, const Blocks& Rd, double sigma_mu, const Blocks* corr,
                   Vector& dy, Blocks& dS, Blocks& dZ) const {
        Blocks G(nb_);
        for (std::size_t b = 0; b < nb_; ++b) {
            G[b] = sigma_mu * Sinv_[b] - Z_[b] - Z_[b] * Rd[b] * Sinv_[b];
            if (corr) G[b] -= (*corr)[b];
        }
        const Vector rhs = rp - apply_A(G);
        dy = schur_.solve(rhs);
        Blocks Atdy = apply_At(dy);
        dS.resize(nb_);
        dZ.resize(nb_);
        for (std::size_t b = 0; b < nb_; ++b) {
            dS[b] = Rd[b] - Atdy[b];
            Matrix T = sigma_mu * Sinv_[b] - Z_[b] - Z_[b] * dS[b] * Sinv_[b];
            if (corr) T -= (*corr)[b];
            dZ[b] = 0.5 * (T + T.transpose());
        }
    }

    bool build_schur() {
        Sinv_.resize(nb_);
        for (std::size_t b = 0; b < nb_; ++b) {
            Eigen::LLT<Matrix> llt(S_[b]);
            if (llt.info() != Eigen::Success) return false;
            Sinv_[b] = llt.solve(Matrix::Identity(p_.block_sizes[b], p_.block_sizes[b]));
            Sinv_[b] = 0.5 * (Sinv_[b] + Sinv_[b].transpose());
        }
        Matrix H = Matrix::Zero(m_, m_);
        for (std::size_t b = 0; b < nb_; ++b) {
            const auto& refs = per_block_[b];
            std::vector<Matrix> Q;
            Q.reserve(refs.size());
            for (const auto& r : refs) Q.push_back(Z_[b] * *r.coeff * Sinv_[b]);
            for (std::size_t l = 0; l < refs.size(); ++l) {
                for (std::size_t k = l; k < refs.size(); ++k) {
                    const double v = (Q[l].array() * refs[k].coeff->array()).sum();
                    H(refs[k].var, refs[l].var) += v;
                    if (k != l) H(refs[l].var, refs[k].var) += v;
                }
            }
        }
        H = 0.5 * (H + H.transpose());
        schur_.compute(H);
        if (schur_.info() == Eigen::Success) return true;
        const double reg = 1e-13 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        schur_.compute(H + reg * Matrix::Identity(m_, m_));
        return schur_.info() == Eigen::Success;
    }

    bool step(const Vector& rp, const Blocks& Rd) {
        if (!build_schur()) return false;
        const double mu = inner(Z_, S_) / total_dim_;

        Vector dy_a;
        Blocks dS_a, dZ_a;
        direction(rp, Rd, 0.0, nullptr, dy_a, dS_a, dZ_a);
        const double ap_a = std::min(1.0, max_step(Z_, dZ_a));
        const double ad_a = std::min(1.0, max_step(S_, dS_a));
        Blocks Za(nb_), Sa(nb_);
        for (std::size_t b = 0; b < nb_; ++b) {
            Za[b] = Z_[b] + ap_a * dZ_a[b];
            Sa[b] = S_[b] + ad_a * dS_a[b];
        }
        const double mu_a = inner(Za, Sa) / total_dim_;
        const double sigma = std::clamp(std::pow(mu_a / mu, 3.0), 0.0, 1.0);

        Blocks corr(nb_);
        for (std::size_t b = 0; b < nb_; ++b) corr[b] = dZ_a[b] * dS_a[b] * Sinv_[b];
        Vector dy;
        Blocks dS, dZ;
        direction(rp, Rd, sigma * mu, &corr, dy, dS, dZ);

        const double ap = std::min(1.0, o_.step_fraction * max_step(Z_, dZ));
        const double ad = std::min(1.0, o_.step_fraction * max_step(S_, dS));
        if (!(ap > 1e-14) && !(ad > 1e-14)) return false;
        for (std::size_t b = 0; b < nb_; ++b) {
            Z_[b] += ap * dZ[b];
            S_[b] += ad * dS[b];
            Z_[b] = 0.5 * (Z_[b] + Z_[b].transpose());
            S_[b] = 0.5 * (S_[b] + S_[b].transpose());
        }
        y_ += ad * dy;
        return y_.allFinite();
    }

    const Problem& p_;
    const Options& o_;
    std::size_t nb_ = 0;
    int m_ = 0;
    double total_dim_ = 0.0;
    std::vector<std::vector<Ref>> per_block_;
    Blocks Z_, S_, Sinv_;
    Vector y_;
    Eigen::LLT<Matrix> schur_;
};

}  // namespace

std::string InteriorPointBackend::name() const { return "smjls-ipm-hkm"; }

Result InteriorPointBackend::solve(const Problem& problem) const {
    return Solver(problem, options_).run();
}

std::shared_ptr<const Backend> default_backend() {
    static const auto backend = std::make_shared<InteriorPointBackend>();
    return backend;
}

}  // namespace smjls::sdp
