#include <smjls/analysis.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <smjls/operators.hpp>
#include <smjls/riccati.hpp>

namespace smjls {

namespace {

const Matrix& A_of(const SystemDef& sys, int i) { return sys.modes[static_cast<std::size_t>(i)].A; }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int sample_index(std::mt19937_64& rng, const Eigen::Ref<const Vector>& probs) {
    const double u = uniform01(rng);
    double acc = 0.0;
    int last = -1;
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        if (probs(j) <= 0.0) continue;
        acc += probs(j);
        last = static_cast<int>(j);
        if (u < acc) return last;
    }
    if (last < 0) throw std::runtime_error("cannot sample from an all-zero distribution");
    return last;
}

void check_window_symbols(const SystemDef& sys, const Word& window) {
    for (int s : window.symbols) {
        if (s < 0 || s >= sys.num_symbols()) {
            throw std::invalid_argument("window " + to_string(window) + " uses an unknown symbol");
        }
    }
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(t) for t in [0, count) over up to `threads` workers. Each index is
// handled exactly once, so results indexed by t do not depend on scheduling.
void parallel_for(int count, unsigned threads, const std::function<void(int)>& fn) {
    threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max(count, 1)));
    if (threads <= 1) {
        for (int t = 0; t < count; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int t = static_cast<int>(w); t < count; t += static_cast<int>(threads)) fn(t);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

Word trial_window(const SystemDef& sys, const WindowPolicy& policy, int length, std::uint64_t seed) {
    if (const auto* fixed = std::get_if<FixedWindow>(&policy)) {
        if (length == 0) return Word{};
        if (fixed->base.empty()) throw std::invalid_argument("fixed window policy needs a nonempty base word");
        return repeat_to_length(fixed->base, length);
    }
    std::mt19937_64 rng(seed);
    return random_admissible_word(sys.switching, sys.num_symbols(), length, rng);
}

void validate_policy(const SystemDef& sys, const WindowPolicy& policy, int length) {
    if (const auto* fixed = std::get_if<FixedWindow>(&policy)) {
        const Word w = trial_window(sys, policy, length, 0);
        check_window_symbols(sys, fixed->base);
        if (!is_admissible(sys.switching, sys.num_symbols(), w)) {
            throw SwitchingError("window " + to_string(fixed->base) + " repeated is not admissible");
        }
    }
}

}  // namespace

double SecondMomentTable::max_eigenvalue(int k) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& h : H[static_cast<std::size_t>(k)]) best = std::max(best, max_sym_eigenvalue(h));
    return best;
}

SecondMomentTable exact_second_moment(const SystemDef& sys, const Word& window) {
    const int K = static_cast<int>(window.size());
    if (K > kMaxExactHorizon) throw std::invalid_argument("exact second moments limited to K <= 10000");
    check_window_symbols(sys, window);
    const int N = sys.num_modes();
    const Eigen::Index n = sys.state_dim();
    SecondMomentTable table;
    table.window = window;
    table.H.resize(static_cast<std::size_t>(K + 1));
    for (int k = 0; k <= K; ++k) {
        std::vector<Matrix> G(static_cast<std::size_t>(N), Matrix::Identity(n, n));
        for (int l = k - 1; l >= 0; --l) {
            std::vector<Matrix> prev(static_cast<std::size_t>(N));
            for (int i = 0; i < N; ++i) {
                Matrix mixed = Matrix::Zero(n, n);
                for (int j = 0; j < N; ++j) {
                    const double p = sys.transitions.prob(window[static_cast<std::size_t>(l)], i, j);
                    if (p != 0.0) mixed += p * G[static_cast<std::size_t>(j)];
                }
                prev[static_cast<std::size_t>(i)] = symmetrized(A_of(sys, i).transpose() * mixed * A_of(sys, i));
            }
            G = std::move(prev);
        }
        table.H[static_cast<std::size_t>(k)] = std::move(G);
    }
    return table;
}

Matrix brute_force_second_moment(const SystemDef& sys, const Word& window, int mode) {
    const int K = static_cast<int>(window.size());
    if (K > kMaxBruteForceHorizon) throw std::invalid_argument("brute-force enumeration limited to K <= 8");
    if (mode < 0 || mode >= sys.num_modes()) throw std::out_of_range("mode index out of range");
    check_window_symbols(sys, window);
    const int N = sys.num_modes();
    const Eigen::Index n = sys.state_dim();
    Matrix acc = Matrix::Zero(n, n);
    // Path theta(1..K) encoded in base N.
    long long paths = 1;
    for (int k = 0; k < K; ++k) paths *= N;
    std::vector<int> theta(static_cast<std::size_t>(K + 1));
    for (long long code = 0; code < paths; ++code) {
        theta[0] = mode;
        long long c = code;
        for (int k = 1; k <= K; ++k) {
            theta[static_cast<std::size_t>(k)] = static_cast<int>(c % N);
            c /= N;
        }
        double weight = 1.0;
        Matrix phi = Matrix::Identity(n, n);
        for (int k = 0; k < K; ++k) {
            weight *= sys.transitions.prob(window[static_cast<std::size_t>(k)], theta[static_cast<std::size_t>(k)],
                                           theta[static_cast<std::size_t>(k + 1)]);
            phi = A_of(sys, theta[static_cast<std::size_t>(k)]) * phi;
        }
        if (weight != 0.0) acc += weight * phi.transpose() * phi;
    }
    return symmetrized(acc);
}

std::vector<std::vector<Matrix>> mode_covariances(const SystemDef& sys, const Word& window,
                                                   const std::vector<Matrix>& Q0) {
    const int N = sys.num_modes();
    if (static_cast<int>(Q0.size()) != N) throw std::invalid_argument("expected one initial covariance per mode");
    check_window_symbols(sys, window);
    std::vector<std::vector<Matrix>> Q{Q0};
    for (std::size_t k = 0; k < window.size(); ++k) {
        std::vector<Matrix> next(static_cast<std::size_t>(N), Matrix::Zero(sys.state_dim(), sys.state_dim()));
        for (int i = 0; i < N; ++i) {
            const Matrix prop = A_of(sys, i) * Q.back()[static_cast<std::size_t>(i)] * A_of(sys, i).transpose();
            for (int j = 0; j < N; ++j) {
                const double p = sys.transitions.prob(window[k], i, j);
                if (p != 0.0) next[static_cast<std::size_t>(j)] += p * prop;
            }
        }
        for (auto& m : next) m = symmetrized(m);
        Q.push_back(std::move(next));
    }
    return Q;
}

std::vector<double> expected_lyapunov(const Certificate& cert, const Word& window,
                                      const std::vector<std::vector<Matrix>>& Q) {
    const int M = cert.M;
    const int last = static_cast<int>(window.size()) - M;
    if (last < 0) throw std::invalid_argument("window shorter than the certificate memory");
    std::vector<double> V;
    for (int k = 0; k <= last && k < static_cast<int>(Q.size()); ++k) {
        const Word w(std::vector<int>(window.symbols.begin() + k, window.symbols.begin() + k + M));
        double v = 0.0;
        for (std::size_t i = 0; i < Q[static_cast<std::size_t>(k)].size(); ++i) {
            auto it = cert.X.find({static_cast<int>(i), w});
            if (it == cert.X.end()) {
                throw std::invalid_argument("certificate has no matrix for window " + to_string(w));
            }
            v += (it->second.mat().array() * Q[static_cast<std::size_t>(k)][i].array()).sum();
        }
        V.push_back(v);
    }
    return V;
}

double EnergyIdentity::residual() const {
    return std::abs(path_sum - storage_value) / std::max(1.0, std::abs(storage_value));
}

EnergyIdentity worst_case_energy(const SystemDef& sys, const Word& window, int T, const Vector& x0) {
    if (x0.size() != sys.state_dim()) throw std::invalid_argument("x0 has the wrong dimension");
    const RiccatiSolution sol = riccati_backward(sys, window, T, 0.0);
    const Vector p0 = sys.initial_distribution();
    const int N = sys.num_modes();

    std::function<double(int, int, const Vector&)> walk = [&](int k, int i, const Vector& x) -> double {
        const SymMatrix mixed = blend(sys, i, window[static_cast<std::size_t>(k)], sol.X[static_cast<std::size_t>(k + 1)]);
        const Vector w = worst_input_gain(sys, i, mixed) * x;
        const auto& m = sys.modes[static_cast<std::size_t>(i)];
        const Vector z = m.C * x + m.D * w;
        double total = z.squaredNorm() - w.squaredNorm();
        if (k == T) return total;
        const Vector next = m.A * x + m.B * w;
        for (int j = 0; j < N; ++j) {
            const double p = sys.transitions.prob(window[static_cast<std::size_t>(k)], i, j);
            if (p != 0.0) total += p * walk(k + 1, j, next);
        }
        return total;
    };

    EnergyIdentity out{0.0, 0.0};
    for (int i = 0; i < N; ++i) {
        if (p0(i) == 0.0) continue;
        out.path_sum += p0(i) * walk(0, i, x0);
        out.storage_value += p0(i) * x0.dot(sol.at(i, 0).mat() * x0);
    }
    return out;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over the pair
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Trajectory::residual(const SystemDef& sys) const {
    double r = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const auto& m = sys.modes[static_cast<std::size_t>(modes[k])];
        r = std::max(r, (x[k + 1] - m.A * x[k] - m.B * w[k]).cwiseAbs().maxCoeff());
        if (z[k].size()) r = std::max(r, (z[k] - m.C * x[k] - m.D * w[k]).cwiseAbs().maxCoeff());
    }
    return r;
}

Trajectory simulate(const SystemDef& sys, const Word& window, int T, const InputSpec& input,
                    const InitialState& x0, std::uint64_t seed) {
    if (T < 0) throw std::invalid_argument("horizon must be nonnegative");
    if (static_cast<int>(window.size()) < T) {
        throw std::invalid_argument("window needs at least T = " + std::to_string(T) + " symbols");
    }
    check_window_symbols(sys, window);
    const Eigen::Index n = sys.state_dim(), m = sys.input_dim();
    if (const auto* custom = std::get_if<CustomInput>(&input)) {
        if (static_cast<int>(custom->w.size()) != T + 1) throw std::invalid_argument("custom input needs T+1 vectors");
        for (const auto& v : custom->w) {
            if (v.size() != m) throw std::invalid_argument("custom input has the wrong dimension");
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Trajectory tr;
    tr.seed = seed;
    tr.modes.reserve(static_cast<std::size_t>(T + 1));
    tr.modes.push_back(sample_index(rng, sys.initial_distribution()));

    Vector x(n);
    if (const auto* fixed = std::get_if<FixedState>(&x0)) {
        if (fixed->x0.size() != n) throw std::invalid_argument("x0 has the wrong dimension");
        x = fixed->x0;
    } else if (std::holds_alternative<UnitSphereState>(x0)) {
        do {
            for (Eigen::Index r = 0; r < n; ++r) x(r) = gauss(rng);
        } while (n > 0 && x.norm() == 0.0);
        if (n > 0) x /= x.norm();
    } else {
        x.setZero();
        if (n > 0) x(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n))) = 1.0;
    }
    tr.x.push_back(x);
    for (int k = 0; k <= T; ++k) {
        const int i = tr.modes.back();
        const auto& mm = sys.modes[static_cast<std::size_t>(i)];
        Vector w = Vector::Zero(m);
        if (const auto* noise = std::get_if<WhiteNoiseInput>(&input)) {
            for (Eigen::Index r = 0; r < m; ++r) w(r) = noise->sigma * gauss(rng);
        } else if (const auto* custom = std::get_if<CustomInput>(&input)) {
            w = custom->w[static_cast<std::size_t>(k)];
        }
        tr.z.push_back(mm.C * tr.x.back() + mm.D * w);
        tr.x.push_back(mm.A * tr.x.back() + mm.B * w);
        tr.w.push_back(std::move(w));
        if (k < T) {
            const int s = window[static_cast<std::size_t>(k)];
            tr.modes.push_back(sample_index(rng, sys.transitions.matrices[static_cast<std::size_t>(s)].row(i).transpose()));
        }
    }
    return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const auto n = traj.x.empty() ? 0 : traj.x.front().size();
    const auto p = traj.z.empty() ? 0 : traj.z.front().size();
    const auto m = traj.w.empty() ? 0 : traj.w.front().size();
    out << "k,mode";
    for (Eigen::Index r = 0; r < n; ++r) out << ",x" << r + 1;
    for (Eigen::Index r = 0; r < p; ++r) out << ",z" << r + 1;
    for (Eigen::Index r = 0; r < m; ++r) out << ",w" << r + 1;
    out << "\n";
    const auto old_precision = out.precision(17);
    for (std::size_t k = 0; k < traj.modes.size(); ++k) {
        out << k << "," << traj.modes[k] + 1;
        for (Eigen::Index r = 0; r < n; ++r) out << "," << traj.x[k](r);
        for (Eigen::Index r = 0; r < p; ++r) out << "," << traj.z[k](r);
        for (Eigen::Index r = 0; r < m; ++r) out << "," << traj.w[k](r);
        out << "\n";
    }
    out.precision(old_precision);
}

DecayEstimate fit_decay(const std::vector<double>& mean_square) {
    DecayEstimate est;
    est.mean_square = mean_square;
    std::vector<double> ks, ys;
    for (std::size_t k = 0; k < mean_square.size(); ++k) {
        const double v = mean_square[k];
        if (!(v > std::numeric_limits<double>::min()) || !std::isfinite(v)) break;
        ks.push_back(static_cast<double>(k));
        ys.push_back(std::log(v));
    }
    est.points_used = static_cast<int>(ks.size());
    if (ks.size() < 2) {
        est.degenerate = true;
        est.c_hat = mean_square.empty() ? 0.0 : mean_square.front();
        return est;
    }
    const double np = static_cast<double>(ks.size());
    double mk = 0.0, my = 0.0;
    for (std::size_t q = 0; q < ks.size(); ++q) {
        mk += ks[q];
        my += ys[q];
    }
    mk /= np;
    my /= np;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t q = 0; q < ks.size(); ++q) {
        sxx += (ks[q] - mk) * (ks[q] - mk);
        sxy += (ks[q] - mk) * (ys[q] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mk;
    double ssr = 0.0;
    for (std::size_t q = 0; q < ks.size(); ++q) {
        const double r = ys[q] - intercept - slope * ks[q];
        ssr += r * r;
    }
    const double se_slope = ks.size() > 2 ? std::sqrt(ssr / (np - 2.0) / sxx) : 0.0;
    est.lambda_hat = std::exp(slope);
    est.c_hat = std::exp(intercept);
    est.lambda_se = est.lambda_hat * se_slope;
    est.lambda_lo = std::exp(slope - 1.96 * se_slope);
    est.lambda_hi = std::exp(slope + 1.96 * se_slope);
    return est;
}

DecayEstimate estimate_decay(const SystemDef& sys, const WindowPolicy& policy, const MonteCarloOptions& opts) {
    if (opts.trials < 100) throw std::invalid_argument("decay estimation needs at least 100 trials");
    if (opts.horizon < 1) throw std::invalid_argument("decay estimation needs a horizon of at least 1");
    validate_policy(sys, policy, opts.horizon);
    const int T = opts.horizon;
    std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(opts.trials));
    parallel_for(opts.trials, opts.threads, [&](int t) {
        const Word w = trial_window(sys, policy, T, trial_seed(opts.seed, 2 * static_cast<std::uint64_t>(t) + 1));
        const Trajectory tr = simulate(sys, w, T, ZeroInput{}, UnitSphereState{},
                                       trial_seed(opts.seed, 2 * static_cast<std::uint64_t>(t)));
        auto& out = per_trial[static_cast<std::size_t>(t)];
        out.reserve(static_cast<std::size_t>(T + 1));
        for (int k = 0; k <= T; ++k) out.push_back(tr.x[static_cast<std::size_t>(k)].squaredNorm());
    });
    std::vector<double> mean(static_cast<std::size_t>(T + 1), 0.0);
    for (const auto& row : per_trial) {
        for (std::size_t k = 0; k < row.size(); ++k) mean[k] += row[k];
    }
    for (auto& v : mean) v /= opts.trials;
    return fit_decay(mean);
}

std::vector<double> exact_mean_square(const SystemDef& sys, const Word& window) {
    const SecondMomentTable table = exact_second_moment(sys, window);
    const Vector p0 = sys.initial_distribution();
    const double n = static_cast<double>(sys.state_dim());
    std::vector<double> out;
    for (int k = 0; k <= table.horizon(); ++k) {
        double v = 0.0;
        for (int i = 0; i < sys.num_modes(); ++i) v += p0(i) * table.at(i, k).trace();
        out.push_back(v / n);
    }
    return out;
}

GainEstimate estimate_gain(const SystemDef& sys, const WindowPolicy& policy, const MonteCarloOptions& opts,
                           double sigma) {
    if (opts.trials < 2) throw std::invalid_argument("gain estimation needs at least 2 trials");
    if (!(sigma > 0.0)) throw std::invalid_argument("noise intensity must be positive");
    validate_policy(sys, policy, opts.horizon);
    const int T = opts.horizon;
    std::vector<double> ratio(static_cast<std::size_t>(opts.trials), 0.0);
    const FixedState zero{Vector::Zero(sys.state_dim())};
    parallel_for(opts.trials, opts.threads, [&](int t) {
        const Word w = trial_window(sys, policy, T, trial_seed(opts.seed, 2 * static_cast<std::uint64_t>(t) + 1));
        const Trajectory tr = simulate(sys, w, T, WhiteNoiseInput{sigma}, zero,
                                       trial_seed(opts.seed, 2 * static_cast<std::uint64_t>(t)));
        double ez = 0.0, ew = 0.0;
        for (std::size_t k = 0; k < tr.z.size(); ++k) {
            ez += tr.z[k].squaredNorm();
            ew += tr.w[k].squaredNorm();
        }
        ratio[static_cast<std::size_t>(t)] = ew > 0.0 ? ez / ew : 0.0;
    });
    GainEstimate g;
    g.trials = opts.trials;
    for (double r : ratio) g.mean += r;
    g.mean /= opts.trials;
    double var = 0.0;
    for (double r : ratio) var += (r - g.mean) * (r - g.mean);
    var /= (opts.trials - 1);
    g.standard_error = std::sqrt(var / opts.trials);
    return g;
}

DecayConstants decay_constants(const Certificate& cert) {
    double nu = cert.nu;
    if (cert.kind == LmiKind::Brl) {
        if (!cert.stability_nu) {
            throw std::invalid_argument("bounded-real certificate carries no stability margin");
        }
        nu = *cert.stability_nu;
    }
    if (!(cert.eta > 0.0) || !(cert.rho >= cert.eta) || !(nu > 0.0)) {
        throw std::invalid_argument("certificate margins do not define decay constants");
    }
    DecayConstants out;
    out.c = cert.rho / cert.eta;
    out.lambda = std::clamp(1.0 - nu / cert.rho, 0.0, 1.0);
    out.weak = out.lambda > 1.0 - 1e-6;
    return out;
}

}  // namespace smjls
