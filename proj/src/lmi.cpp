#include <smjls/lmi.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <smjls/operators.hpp>

namespace smjls {

namespace {

using Getter = std::function<const SymMatrix&(int)>;

SymMatrix block_value(const LmiProblem& prob, int b, const Getter& X) {
    const auto& blk = prob.blocks[static_cast<std::size_t>(b)];
    std::vector<SymMatrix> next;
    next.reserve(blk.suffix_vars.size());
    for (int v : blk.suffix_vars) next.push_back(X(v));
    const SymMatrix mixed = blend(prob.sys, blk.mode, blk.head, next);
    const SymMatrix& current = X(blk.prefix_var);
    if (prob.kind == LmiKind::Brl) return op_B(prob.sys, blk.mode, mixed, current);
    const Matrix& A = prob.sys.modes[static_cast<std::size_t>(blk.mode)].A;
    return SymMatrix(A.transpose() * mixed.mat() * A - current.mat());
}

// A' (sum_j pi_ij X_j) A - X(i, prefix), whatever kind the problem is.
SymMatrix stability_block(const LmiProblem& prob, int b, const std::vector<SymMatrix>& X) {
    const auto& blk = prob.blocks[static_cast<std::size_t>(b)];
    std::vector<SymMatrix> next;
    for (int v : blk.suffix_vars) next.push_back(X[static_cast<std::size_t>(v)]);
    const SymMatrix mixed = blend(prob.sys, blk.mode, blk.head, next);
    const Matrix& A = prob.sys.modes[static_cast<std::size_t>(blk.mode)].A;
    return SymMatrix(A.transpose() * mixed.mat() * A - X[static_cast<std::size_t>(blk.prefix_var)].mat());
}

std::vector<Matrix> symmetric_basis(Eigen::Index n) {
    std::vector<Matrix> basis;
    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index q = p; q < n; ++q) {
            Matrix E = Matrix::Zero(n, n);
            E(p, q) = 1.0;
            E(q, p) = 1.0;
            basis.push_back(E);
        }
    }
    return basis;
}

LmiProblem build_common(const SystemDef& sys, LmiKind kind, int M) {
    if (M < 0) throw std::invalid_argument("window length M must be nonnegative");
    if (sys.modes.empty()) throw std::invalid_argument("system has no modes");
    LmiProblem prob;
    prob.kind = kind;
    prob.M = M;
    prob.sys = sys;
    const int N = sys.num_modes();
    const int J = sys.num_symbols();
    const auto words = enumerate_words(sys.switching, M, J);
    const auto extended = enumerate_words(sys.switching, M + 1, J);
    if (extended.empty()) throw SwitchingError("no admissible window of length " + std::to_string(M + 1));
    for (int i = 0; i < N; ++i) {
        for (const auto& w : words) {
            prob.variable_index.emplace(VariableKey{i, w}, prob.num_variables());
            prob.variables.emplace_back(i, w);
        }
    }
    auto index_of = [&](int i, const Word& w) {
        auto it = prob.variable_index.find({i, w});
        if (it == prob.variable_index.end()) {
            throw SwitchingError("window " + to_string(w) + " is not closed under prefix/suffix");
        }
        return it->second;
    };
    for (int i = 0; i < N; ++i) {
        for (const auto& w : extended) {
            const WordSplit split = split_word(w);
            BlockDescriptor blk{i, w, split.head, index_of(i, split.prefix), {}};
            for (int j = 0; j < N; ++j) blk.suffix_vars.push_back(index_of(j, split.suffix));
            prob.blocks.push_back(std::move(blk));
        }
    }
    return prob;
}

VerificationReport evaluate_assignment(const LmiProblem& prob, const std::vector<SymMatrix>& X,
                                       double margin) {
    VerificationReport rep;
    rep.max_block_eigenvalue = -std::numeric_limits<double>::infinity();
    double stab_max = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < prob.num_blocks(); ++b) {
        const double e = block_value(prob, b, [&](int v) -> const SymMatrix& {
                             return X[static_cast<std::size_t>(v)];
                         }).max_eigenvalue();
        if (e > rep.max_block_eigenvalue) {
            rep.max_block_eigenvalue = e;
            rep.worst_mode = prob.blocks[static_cast<std::size_t>(b)].mode;
            rep.worst_word = prob.blocks[static_cast<std::size_t>(b)].word;
        }
        if (prob.kind == LmiKind::Brl) stab_max = std::max(stab_max, stability_block(prob, b, X).max_eigenvalue());
    }
    rep.eta = std::numeric_limits<double>::infinity();
    rep.rho = -std::numeric_limits<double>::infinity();
    std::size_t worst_x = 0;
    for (std::size_t v = 0; v < X.size(); ++v) {
        const Vector ev = sym_eigenvalues(X[v].mat());
        if (ev(0) < rep.eta) worst_x = v;
        rep.eta = std::min(rep.eta, ev(0));
        rep.rho = std::max(rep.rho, ev(ev.size() - 1));
    }
    rep.min_x_eigenvalue = rep.eta;
    rep.nu = -rep.max_block_eigenvalue;
    if (prob.kind == LmiKind::Brl) rep.stability_nu = -stab_max;
    const double decay_nu = prob.kind == LmiKind::Brl ? -stab_max : rep.nu;
    if (rep.eta > 0.0 && decay_nu > 0.0) {
        rep.c = rep.rho / rep.eta;
        rep.lambda = std::max(0.0, 1.0 - decay_nu / rep.rho);
    } else {
        rep.c = std::numeric_limits<double>::infinity();
        rep.lambda = 1.0;
    }
    rep.passed = rep.eta > 0.0 && rep.max_block_eigenvalue <= -margin / 2.0;
    std::ostringstream os;
    if (!(rep.eta > 0.0)) {
        const VariableKey& key = prob.variables[worst_x];
        os << "X(mode " << key.first + 1 << ", word " << to_string(key.second)
           << ") not positive definite (min eigenvalue " << rep.eta << ")";
        if (rep.max_block_eigenvalue > -margin / 2.0) os << "; ";
    }
    if (rep.max_block_eigenvalue > -margin / 2.0) {
        os << "block (mode " << rep.worst_mode + 1 << ", word " << to_string(rep.worst_word)
           << ") has max eigenvalue " << rep.max_block_eigenvalue << " > " << -margin / 2.0;
    } else if (rep.passed) {
        os << "all " << prob.num_blocks() << " blocks negative definite with margin " << rep.nu;
    }
    rep.message = os.str();
    return rep;
}

}  // namespace

const char* to_string(LmiKind k) { return k == LmiKind::Stability ? "stability" : "brl"; }

LmiKind parse_lmi_kind(const std::string& s) {
    if (s == "stability") return LmiKind::Stability;
    if (s == "brl") return LmiKind::Brl;
    throw std::invalid_argument("unknown LMI kind '" + s + "' (expected stability or brl)");
}

const char* to_string(FeasibilityOutcome::Kind k) {
    switch (k) {
        case FeasibilityOutcome::Kind::Feasible: return "feasible";
        case FeasibilityOutcome::Kind::Infeasible: return "infeasible";
        case FeasibilityOutcome::Kind::SolverFailure: return "solver-failure";
    }
    return "?";
}

Eigen::Index LmiProblem::block_dim() const {
    return kind == LmiKind::Brl ? sys.state_dim() + sys.input_dim() : sys.state_dim();
}

SymMatrix LmiProblem::evaluate_block(int b, const std::vector<SymMatrix>& X) const {
    if (static_cast<int>(X.size()) != num_variables()) {
        throw std::invalid_argument("evaluate_block: expected one matrix per variable");
    }
    return block_value(*this, b, [&](int v) -> const SymMatrix& { return X[static_cast<std::size_t>(v)]; });
}

LmiProblem build_stability_lmi(const SystemDef& sys, int M) {
    return build_common(sys, LmiKind::Stability, M);
}

LmiProblem build_brl_lmi(const SystemDef& sys, int M, std::optional<double> gamma) {
    if (!positivity_hypothesis(sys)) {
        throw HypothesisViolation(
            "bounded real lemma needs p_i(k) > 0 for all modes and times, which holds iff p0 is "
            "entrywise positive and every column of every reachable transition matrix is nonzero");
    }
    const double g = gamma.value_or(1.0);
    LmiProblem prob = build_common(g == 1.0 ? sys : scaled_output(sys, g), LmiKind::Brl, M);
    prob.gamma = g;
    return prob;
}

LmiProblem build_lmi(const SystemDef& sys, LmiKind kind, int M, std::optional<double> gamma) {
    return kind == LmiKind::Brl ? build_brl_lmi(sys, M, gamma) : build_stability_lmi(sys, M);
}

sdp::Problem to_sdp(const LmiProblem& prob) {
    const Eigen::Index n = prob.state_dim();
    const Eigen::Index bd = prob.block_dim();
    const auto basis = symmetric_basis(n);
    const int nsym = static_cast<int>(basis.size());
    const int nv = prob.num_variables();
    const int nb = prob.num_blocks();
    const int t_index = nv * nsym;

    sdp::Problem out;
    out.A.resize(static_cast<std::size_t>(t_index + 1));
    out.b = Vector::Zero(t_index + 1);
    out.b(t_index) = 1.0;

    const SymMatrix zero = SymMatrix::zero(n);
    for (int b = 0; b < nb; ++b) {
        const auto& blk = prob.blocks[static_cast<std::size_t>(b)];
        const Matrix F0 = block_value(prob, b, [&](int) -> const SymMatrix& { return zero; }).mat();
        out.block_sizes.push_back(static_cast<int>(bd));
        out.C.push_back(-F0);
        std::set<int> involved(blk.suffix_vars.begin(), blk.suffix_vars.end());
        involved.insert(blk.prefix_var);
        for (int v : involved) {
            for (int p = 0; p < nsym; ++p) {
                const SymMatrix E(basis[static_cast<std::size_t>(p)]);
                const Matrix F = block_value(prob, b, [&](int u) -> const SymMatrix& {
                                     return u == v ? E : zero;
                                 }).mat();
                Matrix coeff = F - F0;
                if (coeff.cwiseAbs().maxCoeff() == 0.0) continue;
                out.A[static_cast<std::size_t>(v * nsym + p)].push_back({b, std::move(coeff)});
            }
        }
        out.A[static_cast<std::size_t>(t_index)].push_back({b, Matrix::Identity(bd, bd)});
    }
    for (int v = 0; v < nv; ++v) {
        const int lower = static_cast<int>(out.block_sizes.size());
        out.block_sizes.push_back(static_cast<int>(n));
        out.C.push_back(-prob.normalization * Matrix::Identity(n, n));
        const int upper = lower + 1;
        out.block_sizes.push_back(static_cast<int>(n));
        out.C.push_back(prob.x_cap * Matrix::Identity(n, n));
        for (int p = 0; p < nsym; ++p) {
            auto& list = out.A[static_cast<std::size_t>(v * nsym + p)];
            list.push_back({lower, -basis[static_cast<std::size_t>(p)]});
            list.push_back({upper, basis[static_cast<std::size_t>(p)]});
        }
    }
    if (std::isfinite(prob.margin_cap)) {
        const int tcap = static_cast<int>(out.block_sizes.size());
        out.block_sizes.push_back(1);
        out.C.push_back(Matrix::Constant(1, 1, prob.margin_cap));
        out.A[static_cast<std::size_t>(t_index)].push_back({tcap, Matrix::Ones(1, 1)});
    }

    // X = sqrt(lo * cap) I sits strictly inside the normalization band; t is
    // then chosen below the worst block.
    Vector y0 = Vector::Zero(t_index + 1);
    const double x0 = std::sqrt(prob.normalization * prob.x_cap);
    const SymMatrix X0 = SymMatrix::identity(n, x0);
    for (int v = 0; v < nv; ++v) {
        int p = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = r; c < n; ++c, ++p) {
                if (r == c) y0(v * nsym + p) = x0;
            }
        }
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < nb; ++b) {
        worst = std::max(worst, block_value(prob, b, [&](int) -> const SymMatrix& { return X0; }).max_eigenvalue());
    }
    y0(t_index) = -worst - 1.0;
    if (std::isfinite(prob.margin_cap)) y0(t_index) = std::min(y0(t_index), prob.margin_cap - 1.0);
    out.y0 = y0;
    return out;
}

Certificate make_certificate(const LmiProblem& prob, const std::vector<SymMatrix>& X, double margin) {
    const VerificationReport rep = evaluate_assignment(prob, X, margin);
    Certificate cert;
    cert.kind = prob.kind;
    cert.M = prob.M;
    for (int v = 0; v < prob.num_variables(); ++v) {
        cert.X.emplace(prob.variables[static_cast<std::size_t>(v)], X[static_cast<std::size_t>(v)]);
    }
    cert.margin = margin;
    cert.eta = rep.eta;
    cert.rho = rep.rho;
    cert.nu = rep.nu;
    cert.c = rep.c;
    cert.lambda = rep.lambda;
    if (prob.kind == LmiKind::Brl) cert.gamma = prob.gamma;
    cert.stability_nu = rep.stability_nu;
    cert.normalization = prob.normalization;
    return cert;
}

namespace {

FeasibilityOutcome attempt(const LmiProblem& prob, const FeasibilityOptions& opts,
                           const sdp::Backend& backend) {
    FeasibilityOutcome out;
    out.normalization = prob.normalization;
    const sdp::Problem sp = to_sdp(prob);
    const sdp::Result res = backend.solve(sp);
    if (res.status == sdp::Status::Failure) {
        out.kind = FeasibilityOutcome::Kind::SolverFailure;
        out.reason = res.message;
        return out;
    }
    const Eigen::Index n = prob.state_dim();
    const int nsym = static_cast<int>(n * (n + 1) / 2);
    std::vector<SymMatrix> X;
    X.reserve(static_cast<std::size_t>(prob.num_variables()));
    for (int v = 0; v < prob.num_variables(); ++v) {
        Matrix m(n, n);
        int p = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = r; c < n; ++c, ++p) {
                m(r, c) = res.y(v * nsym + p);
                m(c, r) = m(r, c);
            }
        }
        X.emplace_back(m);
    }
    out.best_t = res.y(prob.num_variables() * nsym);
    Certificate cert = make_certificate(prob, X, opts.margin_threshold);
    cert.solver = {backend.name(), sdp::to_string(res.status), res.iterations, out.best_t, res.relative_gap};
    const bool accepted = out.best_t >= opts.margin_threshold && cert.nu >= opts.margin_threshold &&
                          cert.eta > 0.0;
    if (accepted) {
        out.kind = FeasibilityOutcome::Kind::Feasible;
        out.certificate = std::move(cert);
    } else {
        out.kind = FeasibilityOutcome::Kind::Infeasible;
        std::ostringstream os;
        os << "achieved margin " << out.best_t << " below threshold " << opts.margin_threshold;
        if (res.status != sdp::Status::Optimal) os << " (solver status " << sdp::to_string(res.status) << ")";
        out.reason = os.str();
    }
    return out;
}

}  // namespace

FeasibilityOutcome solve_feasibility(const LmiProblem& prob, const FeasibilityOptions& opts) {
    const auto backend = opts.backend ? opts.backend : sdp::default_backend();
    FeasibilityOutcome first = attempt(prob, opts, *backend);
    if (first.feasible() || prob.kind != LmiKind::Brl || !opts.brl_retry ||
        prob.normalization <= kBrlRetryNormalization) {
        return first;
    }
    LmiProblem relaxed = prob;
    relaxed.normalization = kBrlRetryNormalization;
    FeasibilityOutcome second = attempt(relaxed, opts, *backend);
    if (second.kind == FeasibilityOutcome::Kind::SolverFailure &&
        first.kind == FeasibilityOutcome::Kind::Infeasible) {
        return first;
    }
    return second;
}

CertifyResult certify(const SystemDef& sys, LmiKind kind, int max_M, const FeasibilityOptions& opts) {
    if (max_M < 0) throw std::invalid_argument("max window must be nonnegative");
    CertifyResult result;
    for (int M = 0; M <= max_M; ++M) {
        const LmiProblem prob = build_lmi(sys, kind, M);
        FeasibilityOutcome out = solve_feasibility(prob, opts);
        result.records.push_back({M, out.kind, out.best_t, out.normalization});
        if (out.kind == FeasibilityOutcome::Kind::SolverFailure) throw SolverFailureError(M, out.reason);
        if (out.feasible()) {
            result.certificate = std::move(out.certificate);
            return result;
        }
    }
    result.conclusive_negative = is_homogeneous(sys.switching, sys.num_symbols());
    return result;
}

std::vector<SymMatrix> assignment_for(const LmiProblem& prob, const Certificate& cert) {
    if (cert.M != prob.M || cert.kind != prob.kind) {
        throw std::invalid_argument("certificate kind or window length does not match the problem");
    }
    std::vector<SymMatrix> X;
    X.reserve(static_cast<std::size_t>(prob.num_variables()));
    for (const auto& key : prob.variables) {
        auto it = cert.X.find(key);
        if (it == cert.X.end()) {
            throw std::invalid_argument("certificate is missing X(mode " + std::to_string(key.first + 1) +
                                        ", word " + to_string(key.second) + ")");
        }
        if (it->second.size() != prob.state_dim()) {
            throw std::invalid_argument("certificate matrix X(mode " + std::to_string(key.first + 1) +
                                        ", word " + to_string(key.second) + ") has the wrong size");
        }
        X.push_back(it->second);
    }
    if (cert.X.size() != prob.variables.size()) {
        for (const auto& [key, _] : cert.X) {
            if (!prob.variable_index.count(key)) {
                throw std::invalid_argument("certificate has an entry outside N x Psi_M: mode " +
                                            std::to_string(key.first + 1) + ", word " + to_string(key.second));
            }
        }
    }
    return X;
}

VerificationReport verify_certificate(const SystemDef& sys, const Certificate& cert) {
    const LmiProblem prob = build_lmi(sys, cert.kind, cert.M, cert.gamma);
    return evaluate_assignment(prob, assignment_for(prob, cert), cert.margin);
}

namespace {

// A BRL certificate at gamma with margin nu stays one at every smaller
// gamma' whose output term grows by at most nu - threshold:
//     (1/gamma'^2 - 1/gamma^2) max_i |[C_i D_i]|^2 <= nu - threshold.
// Returns the re-evaluated certificate at that gamma' when it still clears
// the threshold.
std::optional<Certificate> tighten(const SystemDef& sys, const Certificate& cert, double threshold) {
    double s = 0.0;
    for (const auto& m : sys.modes) {
        Matrix CD(m.C.rows(), m.C.cols() + m.D.cols());
        CD << m.C, m.D;
        if (CD.size()) s = std::max(s, max_sym_eigenvalue(CD.transpose() * CD));
    }
    const double g = cert.gamma.value_or(1.0);
    if (!(s > 0.0) || !(cert.nu > threshold)) return std::nullopt;
    const double g2 = 1.0 / std::sqrt(1.0 / (g * g) + (cert.nu - threshold) / s);
    if (!(g2 < g)) return std::nullopt;
    const LmiProblem prob = build_brl_lmi(sys, cert.M, g2);
    Certificate out = make_certificate(prob, assignment_for(prob, cert), threshold);
    if (!(out.nu >= threshold) || !(out.eta > 0.0)) return std::nullopt;
    out.solver = cert.solver;
    out.normalization = cert.normalization;
    return out;
}

}  // namespace

GainResult gain_bisection(const SystemDef& sys, int M, const GainOptions& opts) {
    if (!(opts.tol > 0.0) || !(opts.gamma_max > 0.0)) {
        throw std::invalid_argument("gain bisection needs tol > 0 and gamma_max > 0");
    }
    if (!solve_feasibility(build_stability_lmi(sys, M), opts.feasibility).feasible()) {
        throw GainBoundError("no stability certificate at M=" + std::to_string(M) +
                                  "; the gain bound is undefined");
    }
    int probes = 0;
    const double thr = opts.feasibility.margin_threshold;
    auto probe = [&](double g) {
        ++probes;
        FeasibilityOutcome out = solve_feasibility(build_brl_lmi(sys, M, g), opts.feasibility);
        if (out.feasible()) {
            if (auto tighter = tighten(sys, *out.certificate, thr)) out.certificate = std::move(tighter);
        }
        return out;
    };
    FeasibilityOutcome top = probe(opts.gamma_max);
    if (!top.feasible()) throw GainBoundError("gain exceeds gamma_max");
    Certificate best = *top.certificate;
    double hi = *best.gamma;
    double lo = opts.gamma_max;
    for (;;) {
        lo = std::min(lo, hi) / 10.0;
        if (lo < opts.gamma_floor) return {hi, best, probes};
        FeasibilityOutcome out = probe(lo);
        if (!out.feasible()) break;
        best = *out.certificate;
        hi = *best.gamma;
    }
    while (hi - lo > opts.tol) {
        const double mid = std::sqrt(lo * hi);
        FeasibilityOutcome out = probe(mid);
        if (out.feasible()) {
            best = *out.certificate;
            hi = *best.gamma;
        } else {
            lo = mid;
        }
    }
    return {hi, best, probes};
}

}  // namespace smjls
