#include <smjls/riccati.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace smjls {

namespace {

// Core recursion; `symbols` holds psi(1..T), a psi(T+1) entry is optional.
RiccatiSolution backward(const SystemDef& sys, const std::vector<int>& symbols, int T, double epsilon,
                         double pd_tol) {
    if (T < 0) throw std::invalid_argument("horizon T must be nonnegative");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    const int N = sys.num_modes();
    const Eigen::Index n = sys.state_dim();
    RiccatiSolution sol;
    sol.T = T;
    sol.epsilon = epsilon;
    sol.X.assign(static_cast<std::size_t>(T + 2), std::vector<SymMatrix>(static_cast<std::size_t>(N), SymMatrix::zero(n)));
    sol.w_min_eig = std::numeric_limits<double>::infinity();
    const SymMatrix shift = SymMatrix::identity(n, epsilon);
    for (int k = T; k >= 0; --k) {
        const int s = k < static_cast<int>(symbols.size()) ? symbols[static_cast<std::size_t>(k)] : 0;
        const auto& next = sol.X[static_cast<std::size_t>(k + 1)];
        for (int i = 0; i < N; ++i) {
            const SymMatrix mixed = k == T ? SymMatrix::zero(n) : blend(sys, i, s, next);
            try {
                const WFactor w(sys, i, mixed, pd_tol);
                sol.w_min_eig = std::min(sol.w_min_eig, w.min_eigenvalue());
                const Matrix R = op_R(sys, i, mixed);
                sol.X[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
                    SymMatrix(op_L(sys, i, mixed) + R.transpose() * w.solve(R)) + shift;
            } catch (const NotContractiveAtHorizon& e) {
                throw NotContractiveAtHorizon(i, k, e.eigenvalue());
            }
        }
    }
    return sol;
}

const SymMatrix& lookup(const std::map<VariableKey, SymMatrix>& Y, int i, const Word& w) {
    auto it = Y.find({i, w});
    if (it == Y.end()) {
        throw std::invalid_argument("storage family is missing Y(mode " + std::to_string(i + 1) + ", word " +
                                    to_string(w) + ")");
    }
    return it->second;
}

}  // namespace

RiccatiSolution riccati_backward(const SystemDef& sys, const Word& window, int T, double epsilon,
                                 double pd_tol) {
    if (static_cast<int>(window.size()) != T + 1) {
        throw std::invalid_argument("window must hold T+1 = " + std::to_string(T + 1) + " symbols, got " +
                                    std::to_string(window.size()));
    }
    if (!is_admissible(sys.switching, sys.num_symbols(), window)) {
        throw SwitchingError("window " + to_string(window) + " is not admissible");
    }
    RiccatiSolution sol = backward(sys, window.symbols, T, epsilon, pd_tol);
    sol.window = window;
    return sol;
}

SymMatrix finite_memory_storage(const SystemDef& sys, int mode, const Word& word, int M, double epsilon,
                                double pd_tol) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("finite-memory storage needs epsilon > 0");
    if (static_cast<int>(word.size()) != M) {
        throw std::invalid_argument("word length " + std::to_string(word.size()) + " differs from M=" +
                                    std::to_string(M));
    }
    if (mode < 0 || mode >= sys.num_modes()) throw std::out_of_range("mode index out of range");
    return backward(sys, word.symbols, M, epsilon, pd_tol).at(mode, 0);
}

DissipationReport check_dissipation(const SystemDef& sys, const std::map<VariableKey, SymMatrix>& Y, int M) {
    DissipationReport rep;
    rep.worst_max_eigenvalue = -std::numeric_limits<double>::infinity();
    const int N = sys.num_modes();
    for (const auto& w : enumerate_words(sys.switching, M + 1, sys.num_symbols())) {
        const WordSplit split = split_word(w);
        std::vector<SymMatrix> next;
        for (int j = 0; j < N; ++j) next.push_back(lookup(Y, j, split.suffix));
        for (int i = 0; i < N; ++i) {
            const double e =
                op_B(sys, i, blend(sys, i, split.head, next), lookup(Y, i, split.prefix)).max_eigenvalue();
            ++rep.blocks_checked;
            if (e > rep.worst_max_eigenvalue) {
                rep.worst_max_eigenvalue = e;
                rep.worst_mode = i;
                rep.worst_word = w;
            }
        }
    }
    rep.nu = -rep.worst_max_eigenvalue;
    return rep;
}

StorageFamily build_storage_family(const SystemDef& sys, int M, double epsilon, int max_retries,
                                   double pd_tol) {
    if (max_retries < 0) throw std::invalid_argument("max_retries must be nonnegative");
    const auto words = enumerate_words(sys.switching, M, sys.num_symbols());
    StorageFamily fam;
    double eps = epsilon;
    for (int attempt = 0; attempt <= max_retries; ++attempt, eps /= 10.0) {
        fam.Y.clear();
        fam.epsilon = eps;
        fam.attempts = attempt + 1;
        try {
            for (const auto& w : words) {
                const RiccatiSolution sol = backward(sys, w.symbols, M, eps, pd_tol);
                for (int i = 0; i < sys.num_modes(); ++i) fam.Y.emplace(VariableKey{i, w}, sol.at(i, 0));
            }
        } catch (const NotContractiveAtHorizon&) {
            if (attempt == max_retries) throw;
            continue;
        }
        fam.report = check_dissipation(sys, fam.Y, M);
        if (fam.passed()) break;
    }
    return fam;
}

double shift_invariance_check(const SystemDef& sys, const Word& window, int T, int t, double epsilon,
                              double pd_tol) {
    if (t < 0 || t > T) throw std::invalid_argument("shift t must satisfy 0 <= t <= T");
    const RiccatiSolution full = riccati_backward(sys, window, T, epsilon, pd_tol);
    const Word shifted(std::vector<int>(window.symbols.begin() + t, window.symbols.end()));
    const RiccatiSolution tail = riccati_backward(sys, shifted, T - t, epsilon, pd_tol);
    double dev = 0.0;
    for (int i = 0; i < sys.num_modes(); ++i) {
        dev = std::max(dev, (full.at(i, t).mat() - tail.at(i, 0).mat()).cwiseAbs().maxCoeff());
    }
    return dev;
}

}  // namespace smjls
