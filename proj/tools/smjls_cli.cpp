// smjls: certify and cross-check stability and contractiveness of switched
// Markov jump linear systems.
//
// Exit codes: 0 ok, 1 internal error, 2 invalid input or hypothesis
// violation, 3 undecided up to the requested window, 4 W not positive
// definite along a Riccati recursion.

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <smjls/analysis.hpp>
#include <smjls/certificate_io.hpp>
#include <smjls/lmi.hpp>
#include <smjls/model.hpp>
#include <smjls/report.hpp>
#include <smjls/riccati.hpp>

#include "json_io.hpp"

using namespace smjls;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInvalid = 2, kUndecided = 3, kNotContractive = 4 };

struct Globals {
    std::string report_path;
    unsigned threads = 0;
    bool timings = false;
};

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json matrix_json(const Matrix& m) { return detail::matrix_json(m); }

json word_json(const Word& w) { return detail::symbols_json(w.symbols); }

json findings_json(const ValidationReport& rep) {
    json out = json::array();
    for (const auto& f : rep.findings) {
        out.push_back({{"severity", to_string(f.severity)}, {"code", f.code}, {"message", f.message}});
    }
    return out;
}

RunReport base_report(const std::string& command) {
    RunReport r;
    r.command = command;
    r.backend = sdp::default_backend()->name();
    r.tolerances = {{"pd_tol", kPdTol},
                    {"row_sum_tol", kRowSumTol},
                    {"negative_clamp_tol", kNegativeClampTol},
                    {"x_cap", kDefaultXCap},
                    {"brl_retry_normalization", kBrlRetryNormalization},
                    {"sdp_tolerance", sdp::Options{}.tolerance}};
    return r;
}

SystemDef load_checked(const std::string& path, RunReport& report) {
    const std::string text = detail::read_file(path);
    report.input_digests[path] = sha256_hex(text);
    return parse_system(text);
}

/// "1,2,1" -> 0-based word.
Word parse_window(const std::string& text) {
    std::vector<int> symbols;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 1) throw std::invalid_argument("window symbols are 1-based integers: '" + item + "'");
        symbols.push_back(v - 1);
    }
    return Word(std::move(symbols));
}

Vector parse_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

json certificate_summary(const Certificate& c) {
    json j = {{"kind", to_string(c.kind)}, {"M", c.M},     {"eta", c.eta},       {"rho", c.rho},
              {"nu", c.nu},                {"c", std::isfinite(c.c) ? json(c.c) : json(nullptr)},
              {"lambda", c.lambda},        {"normalization", c.normalization},
              {"variables", c.X.size()},   {"solver_status", c.solver.status},
              {"solver_iterations", c.solver.iterations}};
    if (c.gamma) j["gamma"] = *c.gamma;
    if (c.stability_nu) j["stability_nu"] = *c.stability_nu;
    return j;
}

int finish(RunReport& report, int code, const Globals& g, double elapsed_ms) {
    report.exit_code = code;
    if (g.timings) report.timings_ms = std::map<std::string, double>{{"total", elapsed_ms}};
    const std::string text = report.dump();
    std::cout << text;
    if (!g.report_path.empty()) {
        std::ofstream out(g.report_path, std::ios::binary);
        out << text;
        if (!out) {
            std::cerr << "error: cannot write report to " << g.report_path << "\n";
            return kInternal;
        }
    }
    return code;
}

// Runs `body` with the error-to-exit-code mapping shared by all commands.
template <class Body>
int run(const std::string& command, const Globals& g, Body body) {
    Stopwatch clock;
    RunReport report = base_report(command);
    int code = kInternal;
    try {
        code = body(report);
    } catch (const SchemaError& e) {
        report.outcome = "invalid-input";
        report.details["error"] = e.what();
        if (!report.details.contains("findings")) {
            report.details["findings"] = json::array(
                {{{"severity", "error"}, {"code", "schema"}, {"path", e.path()}, {"message", e.what()}}});
        }
        code = kInvalid;
    } catch (const SwitchingError& e) {
        report.outcome = "invalid-input";
        report.details["error"] = e.what();
        code = kInvalid;
    } catch (const HypothesisViolation& e) {
        report.outcome = "hypothesis-violation";
        report.details["error"] = e.what();
        code = kInvalid;
    } catch (const NotContractiveAtHorizon& e) {
        report.outcome = "not-contractive";
        report.details["error"] = e.what();
        report.details["mode"] = e.mode() + 1;
        report.details["time"] = e.time();
        report.details["eigenvalue"] = e.eigenvalue();
        code = kNotContractive;
    } catch (const SolverFailureError& e) {
        report.outcome = "solver-failure";
        report.details["error"] = e.what();
        report.details["M"] = e.M();
        code = kInternal;
    } catch (const std::invalid_argument& e) {
        report.outcome = "invalid-input";
        report.details["error"] = e.what();
        code = kInvalid;
    } catch (const std::out_of_range& e) {
        report.outcome = "invalid-input";
        report.details["error"] = e.what();
        code = kInvalid;
    } catch (const std::exception& e) {
        report.outcome = "internal-error";
        report.details["error"] = e.what();
        code = kInternal;
    }
    return finish(report, code, g, clock.ms());
}

void require_valid(const SystemDef& sys, RunReport& report) {
    const ValidationReport v = validate_system(sys);
    if (!v.ok) {
        report.details["findings"] = findings_json(v);
        throw SchemaError("$", "system failed validation");
    }
    if (v.p0_assumed_uniform) report.details["p0_assumed_uniform"] = true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certify mean-square stability and contractiveness of switched Markov jump linear systems"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--report", g.report_path, "Also write the run report to this file");
    app.add_option("--threads", g.threads, "Worker threads for Monte Carlo runs (0: all cores)");
    app.add_flag("--timings", g.timings, "Include wall-clock timings in the report");
    std::string system_path;

    auto* validate = app.add_subcommand("validate", "Parse and validate a system file");
    validate->add_option("system", system_path, "System JSON file")->required();

    auto* certify_cmd = app.add_subcommand("certify", "Search M = 0..max for a feasible LMI certificate");
    certify_cmd->add_option("system", system_path, "System JSON file")->required();
    std::string kind = "stability";
    int max_window = 3;
    double margin = kDefaultMarginThreshold;
    std::string cert_out;
    certify_cmd->add_option("--kind", kind, "stability or brl")->check(CLI::IsMember({"stability", "brl"}));
    certify_cmd->add_option("--max-window", max_window, "Largest window length M to try")->check(CLI::NonNegativeNumber);
    certify_cmd->add_option("--margin", margin, "Margin threshold for feasibility");
    certify_cmd->add_option("--out", cert_out, "Write the certificate here");

    auto* verify = app.add_subcommand("verify", "Re-check a certificate with plain linear algebra");
    verify->add_option("system", system_path, "System JSON file")->required();
    std::string cert_in;
    verify->add_option("--cert", cert_in, "Certificate JSON file")->required();

    auto* gain = app.add_subcommand("gain", "Bisect the smallest certified l2 gain");
    gain->add_option("system", system_path, "System JSON file")->required();
    int gain_window = 1;
    GainOptions gain_opts;
    gain->add_option("--window", gain_window, "Window length M")->check(CLI::NonNegativeNumber);
    gain->add_option("--tol", gain_opts.tol, "Bisection tolerance");
    gain->add_option("--gamma-max", gain_opts.gamma_max, "Largest gain probed");

    auto* riccati = app.add_subcommand("riccati", "Backward Riccati recursion along a switching window");
    riccati->add_option("system", system_path, "System JSON file")->required();
    std::string ric_window;
    int horizon = 10;
    double epsilon = 0.0;
    int storage_M = -1;
    riccati->add_option("--window", ric_window, "Comma-separated 1-based symbols, repeated to T+1")->required();
    riccati->add_option("--horizon", horizon, "Horizon T")->check(CLI::NonNegativeNumber);
    riccati->add_option("--epsilon", epsilon, "Perturbation eps >= 0");
    riccati->add_option("--storage", storage_M,
                        "Also build the finite-memory storage family for this window length and check dissipation");

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo simulation, decay fit and gain estimate");
    simulate_cmd->add_option("system", system_path, "System JSON file")->required();
    std::string sim_window;
    int trials = 1;
    std::uint64_t seed = 0;
    int sim_horizon = 100;
    std::string input = "noise";
    double sigma = 1.0;
    std::string x0_spec = "zero";
    std::string estimate = "none";
    std::string csv_path;
    simulate_cmd->add_option("--window", sim_window, "Comma-separated 1-based symbols repeated cyclically (default: random admissible walks)");
    simulate_cmd->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
    auto* seed_opt = simulate_cmd->add_option("--seed", seed, "64-bit seed (generated and reported when absent)");
    simulate_cmd->add_option("--horizon", sim_horizon, "Horizon T")->check(CLI::NonNegativeNumber);
    simulate_cmd->add_option("--input", input, "zero or noise")->check(CLI::IsMember({"zero", "noise"}));
    simulate_cmd->add_option("--sigma", sigma, "White-noise intensity");
    simulate_cmd->add_option("--x0", x0_spec, "zero, sphere, indicator or comma-separated values");
    simulate_cmd->add_option("--estimate", estimate, "none, decay or gain")->check(CLI::IsMember({"none", "decay", "gain"}));
    simulate_cmd->add_option("--csv", csv_path, "Write the first trajectory as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }

    if (*validate) {
        return run("validate", g, [&](RunReport& report) {
            const SystemDef sys = load_checked(system_path, report);
            const ValidationReport v = validate_system(sys);
            report.details = {{"ok", v.ok},
                              {"positivity_hypothesis", v.positivity_hypothesis},
                              {"p0_assumed_uniform", v.p0_assumed_uniform},
                              {"modes", sys.num_modes()},
                              {"symbols", sys.num_symbols()},
                              {"state_dim", sys.state_dim()},
                              {"input_dim", sys.input_dim()},
                              {"output_dim", sys.output_dim()},
                              {"findings", findings_json(v)}};
            report.outcome = v.ok ? "valid" : "invalid";
            return v.ok ? kOk : kInvalid;
        });
    }

    if (*certify_cmd) {
        return run("certify", g, [&](RunReport& report) {
            const SystemDef sys = load_checked(system_path, report);
            require_valid(sys, report);
            FeasibilityOptions opts;
            opts.margin_threshold = margin;
            report.tolerances["margin_threshold"] = margin;
            const CertifyResult res = certify(sys, parse_lmi_kind(kind), max_window, opts);
            json records = json::array();
            for (const auto& r : res.records) {
                records.push_back({{"M", r.M}, {"outcome", to_string(r.outcome)}, {"best_t", r.best_t},
                                   {"normalization", r.normalization}});
            }
            report.details["kind"] = kind;
            report.details["max_window"] = max_window;
            report.details["records"] = records;
            if (!res.found()) {
                report.details["homogeneous"] = res.conclusive_negative;
                report.outcome = res.conclusive_negative ? "infeasible" : "undecided";
                report.details["message"] =
                    res.conclusive_negative
                        ? "switching is homogeneous, so M=0 infeasibility is conclusive"
                        : "no certificate up to max window; this does not show instability";
                return kUndecided;
            }
            report.outcome = "feasible";
            report.details["certificate"] = certificate_summary(*res.certificate);
            if (!cert_out.empty()) {
                save_certificate(*res.certificate, cert_out);
                report.details["certificate_file"] = cert_out;
            }
            return kOk;
        });
    }

    if (*verify) {
        return run("verify", g, [&](RunReport& report) {
            const SystemDef sys = load_checked(system_path, report);
            require_valid(sys, report);
            const std::string text = detail::read_file(cert_in);
            report.input_digests[cert_in] = sha256_hex(text);
            const Certificate cert = parse_certificate(text);
            const VerificationReport v = verify_certificate(sys, cert);
            report.details = {{"passed", v.passed},
                              {"max_block_eigenvalue", v.max_block_eigenvalue},
                              {"min_x_eigenvalue", v.min_x_eigenvalue},
                              {"worst_mode", v.worst_mode + 1},
                              {"worst_word", word_json(v.worst_word)},
                              {"eta", v.eta},
                              {"rho", v.rho},
                              {"nu", v.nu},
                              {"c", std::isfinite(v.c) ? json(v.c) : json(nullptr)},
                              {"lambda", v.lambda},
                              {"message", v.message}};
            if (v.stability_nu) report.details["stability_nu"] = *v.stability_nu;
            report.tolerances["margin_threshold"] = cert.margin;
            report.outcome = v.passed ? "verified" : "rejected";
            return v.passed ? kOk : kInvalid;
        });
    }

    if (*gain) {
        return run("gain", g, [&](RunReport& report) {
            const SystemDef sys = load_checked(system_path, report);
            require_valid(sys, report);
            report.tolerances["bisection_tol"] = gain_opts.tol;
            report.tolerances["gamma_max"] = gain_opts.gamma_max;
            report.tolerances["margin_threshold"] = gain_opts.feasibility.margin_threshold;
            try {
                const GainResult r = gain_bisection(sys, gain_window, gain_opts);
                report.outcome = "bounded";
                report.details = {{"M", gain_window},
                                  {"gamma_hat", r.gamma_hat},
                                  {"contractive", r.gamma_hat < 1.0},
                                  {"probes", r.probes},
                                  {"certificate", certificate_summary(r.certificate)}};
                return kOk;
            } catch (const GainBoundError& e) {
                report.outcome = "undecided";
                report.details["error"] = e.what();
                return kUndecided;
            }
        });
    }

    if (*riccati) {
        return run("riccati", g, [&](RunReport& report) {
            const SystemDef sys = load_checked(system_path, report);
            require_valid(sys, report);
            const Word base = parse_window(ric_window);
            if (base.empty()) throw std::invalid_argument("--window needs at least one symbol");
            const Word window = repeat_to_length(base, horizon + 1);
            report.tolerances["epsilon"] = epsilon;
            report.details["window"] = word_json(window);
            report.details["T"] = horizon;
            const RiccatiSolution sol = riccati_backward(sys, window, horizon, epsilon);
            json start = json::array();
            for (int i = 0; i < sys.num_modes(); ++i) {
                start.push_back({{"mode", i + 1}, {"matrix", matrix_json(sol.at(i, 0).mat())}});
            }
            json max_eigs = json::array();
            for (int k = 0; k <= horizon + 1; ++k) {
                double e = 0.0;
                for (int i = 0; i < sys.num_modes(); ++i) e = std::max(e, sol.at(i, k).max_eigenvalue());
                max_eigs.push_back(e);
            }
            report.details["w_min_eig"] = sol.w_min_eig;
            report.details["X0"] = start;
            report.details["max_eigenvalue_by_time"] = max_eigs;
            report.outcome = "completed";
            if (storage_M >= 0) {
                if (!positivity_hypothesis(sys)) {
                    throw HypothesisViolation("storage construction needs the positivity hypothesis");
                }
                const StorageFamily fam =
                    build_storage_family(sys, storage_M, epsilon > 0.0 ? epsilon : 1e-3);
                report.details["storage"] = {{"M", storage_M},
                                             {"epsilon", fam.epsilon},
                                             {"attempts", fam.attempts},
                                             {"worst_max_eigenvalue", fam.report.worst_max_eigenvalue},
                                             {"worst_mode", fam.report.worst_mode + 1},
                                             {"worst_word", word_json(fam.report.worst_word)},
                                             {"passed", fam.passed()}};
                if (!fam.passed()) {
                    report.outcome = "storage-undecided";
                    return kUndecided;
                }
            }
            return kOk;
        });
    }

    if (*simulate_cmd) {
        return run("simulate", g, [&](RunReport& report) {
            const SystemDef sys = load_checked(system_path, report);
            require_valid(sys, report);
            if (!*seed_opt) seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
            report.details["seed"] = seed;
            report.details["trials"] = trials;
            report.details["horizon"] = sim_horizon;
            WindowPolicy policy = RandomWalkWindow{};
            if (!sim_window.empty()) {
                policy = FixedWindow{parse_window(sim_window)};
                report.details["window"] = word_json(std::get<FixedWindow>(policy).base);
            } else {
                report.details["window"] = "random-walk";
            }
            MonteCarloOptions mc{trials, sim_horizon, seed, g.threads};
            if (estimate == "decay") {
                const DecayEstimate d = estimate_decay(sys, policy, mc);
                report.details["decay"] = {{"c_hat", d.c_hat},
                                           {"lambda_hat", d.lambda_hat},
                                           {"lambda_se", d.lambda_se},
                                           {"lambda_band", {d.lambda_lo, d.lambda_hi}},
                                           {"points_used", d.points_used},
                                           {"degenerate", d.degenerate}};
                if (const auto* fixed = std::get_if<FixedWindow>(&policy);
                    fixed && sim_horizon <= kMaxExactHorizon) {
                    const auto exact = exact_mean_square(sys, repeat_to_length(fixed->base, sim_horizon));
                    const DecayEstimate e = fit_decay(exact);
                    report.details["exact_lambda_fit"] = e.lambda_hat;
                }
                report.outcome = "estimated";
                return kOk;
            }
            if (estimate == "gain") {
                const GainEstimate ge = estimate_gain(sys, policy, mc, sigma);
                report.details["gain"] = {{"mean_energy_ratio", ge.mean},
                                          {"standard_error", ge.standard_error},
                                          {"sigma", sigma}};
                report.outcome = "estimated";
                return kOk;
            }
            InitialState x0 = FixedState{Vector::Zero(sys.state_dim())};
            if (x0_spec == "sphere") {
                x0 = UnitSphereState{};
            } else if (x0_spec == "indicator") {
                x0 = IndicatorState{};
            } else if (x0_spec != "zero") {
                x0 = FixedState{parse_vector(x0_spec)};
            }
            InputSpec in = ZeroInput{};
            if (input == "noise") in = WhiteNoiseInput{sigma};
            json runs = json::array();
            for (int t = 0; t < trials; ++t) {
                Word w;
                if (const auto* fixed = std::get_if<FixedWindow>(&policy)) {
                    w = repeat_to_length(fixed->base, sim_horizon);
                    if (!is_admissible(sys.switching, sys.num_symbols(), w)) {
                        throw SwitchingError("window " + to_string(fixed->base) + " repeated is not admissible");
                    }
                } else {
                    std::mt19937_64 rng(trial_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1));
                    w = random_admissible_word(sys.switching, sys.num_symbols(), sim_horizon, rng);
                }
                const Trajectory tr = simulate(sys, w, sim_horizon, in, x0, trial_seed(seed, 2 * static_cast<std::uint64_t>(t)));
                double ez = 0.0, ew = 0.0;
                for (std::size_t k = 0; k < tr.z.size(); ++k) {
                    ez += tr.z[k].squaredNorm();
                    ew += tr.w[k].squaredNorm();
                }
                runs.push_back({{"trial", t},
                                {"seed", tr.seed},
                                {"output_energy", ez},
                                {"input_energy", ew},
                                {"final_state_norm2", tr.x.back().squaredNorm()},
                                {"residual", tr.residual(sys)}});
                if (t == 0 && !csv_path.empty()) {
                    std::ofstream out(csv_path);
                    if (!out) throw std::runtime_error("cannot write " + csv_path);
                    write_trajectory_csv(out, tr);
                    report.details["csv"] = csv_path;
                }
            }
            report.details["runs"] = runs;
            report.outcome = "simulated";
            return kOk;
        });
    }
    return kInternal;
}
