#include <smjls/model.hpp>

#include <cmath>
#include <sstream>

#include "json_io.hpp"

namespace smjls {

using nlohmann::json;
using namespace detail;

namespace {

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& path) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "dimension mismatch: expected " << rows << "x" << cols << ", got " << m.rows() << "x"
           << m.cols();
        throw SchemaError(path, os.str());
    }
}

SwitchingStructure parse_switching(const json& j, const std::string& path) {
    const json& type = require(j, "type", path);
    if (!type.is_string()) throw SchemaError(path + ".type", "expected a string");
    const auto t = type.get<std::string>();
    if (t == "all") return AllSequences{};
    if (t == "graph") {
        const json& edges = require(j, "edges", path);
        if (!edges.is_array()) throw SchemaError(path + ".edges", "expected an array of pairs");
        GraphSwitching g;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const std::string epath = path + ".edges[" + std::to_string(k) + "]";
            if (!edges[k].is_array() || edges[k].size() != 2) {
                throw SchemaError(epath, "expected a pair [from, to]");
            }
            g.edges.insert({parse_symbol(edges[k][0], epath + "[0]"),
                            parse_symbol(edges[k][1], epath + "[1]")});
        }
        return g;
    }
    if (t == "periodic") {
        PeriodicSwitching p;
        if (j.contains("prefix")) p.prefix = parse_symbols(j["prefix"], path + ".prefix");
        p.period = parse_symbols(require(j, "period", path), path + ".period");
        if (p.period.empty()) throw SchemaError(path + ".period", "must be nonempty");
        return p;
    }
    throw SchemaError(path + ".type", "unknown switching type '" + t + "'");
}

bool same(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

bool ModeMatrices::operator==(const ModeMatrices& o) const {
    return same(A, o.A) && same(B, o.B) && same(C, o.C) && same(D, o.D);
}

bool TransitionMatrixSet::operator==(const TransitionMatrixSet& o) const {
    if (matrices.size() != o.matrices.size()) return false;
    for (std::size_t s = 0; s < matrices.size(); ++s) {
        if (!same(matrices[s], o.matrices[s])) return false;
    }
    return true;
}

bool SystemDef::operator==(const SystemDef& o) const {
    if (modes != o.modes || !(transitions == o.transitions) || switching != o.switching) return false;
    if (p0.has_value() != o.p0.has_value()) return false;
    return !p0 || same(*p0, *o.p0);
}

Vector SystemDef::initial_distribution() const {
    if (p0) return *p0;
    return Vector::Constant(num_modes(), 1.0 / num_modes());
}

void ValidationReport::add(Severity s, std::string code, std::string message) {
    if (s == Severity::Error) ok = false;
    findings.push_back({s, std::move(code), std::move(message)});
}

const char* to_string(Severity s) {
    switch (s) {
        case Severity::Info: return "info";
        case Severity::Warning: return "warning";
        case Severity::Error: return "error";
    }
    return "?";
}

SystemDef parse_system(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("$", "expected a top-level object");

    SystemDef sys;
    const json& modes = require(doc, "modes", "$");
    if (!modes.is_array() || modes.empty()) throw SchemaError("modes", "expected a nonempty array");
    Eigen::Index n = -1, m = -1, p = -1;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string path = "modes[" + std::to_string(i) + "]";
        ModeMatrices mm;
        mm.A = parse_matrix(require(modes[i], "A", path), path + ".A");
        if (n < 0) {
            n = mm.A.rows();
            if (n == 0) throw SchemaError(path + ".A", "state dimension must be positive");
        }
        expect_shape(mm.A, n, n, path + ".A");
        mm.B = parse_matrix(require(modes[i], "B", path), path + ".B");
        if (m < 0) m = mm.B.cols();
        expect_shape(mm.B, n, m, path + ".B");
        mm.C = parse_matrix(require(modes[i], "C", path), path + ".C", n);
        if (p < 0) p = mm.C.rows();
        expect_shape(mm.C, p, n, path + ".C");
        mm.D = parse_matrix(require(modes[i], "D", path), path + ".D", m);
        expect_shape(mm.D, p, m, path + ".D");
        sys.modes.push_back(std::move(mm));
    }
    const auto N = static_cast<Eigen::Index>(sys.modes.size());

    const json& pis = require(doc, "transition_matrices", "$");
    if (!pis.is_array() || pis.empty()) {
        throw SchemaError("transition_matrices", "expected a nonempty array");
    }
    for (std::size_t s = 0; s < pis.size(); ++s) {
        const std::string path = "transition_matrices[" + std::to_string(s) + "]";
        Matrix pi = parse_matrix(pis[s], path);
        expect_shape(pi, N, N, path);
        for (Eigen::Index r = 0; r < N; ++r) {
            for (Eigen::Index c = 0; c < N; ++c) {
                if (pi(r, c) < 0.0 && pi(r, c) >= -kNegativeClampTol) pi(r, c) = 0.0;
            }
        }
        sys.transitions.matrices.push_back(std::move(pi));
    }

    sys.switching = parse_switching(require(doc, "switching", "$"), "switching");

    if (doc.contains("p0")) {
        const json& pj = doc["p0"];
        if (!pj.is_array()) throw SchemaError("p0", "expected an array");
        if (static_cast<Eigen::Index>(pj.size()) != N) {
            throw SchemaError("p0", "dimension mismatch: expected " + std::to_string(N) + " entries");
        }
        Vector p0(N);
        for (Eigen::Index i = 0; i < N; ++i) {
            p0(i) = parse_number(pj[static_cast<std::size_t>(i)], "p0[" + std::to_string(i) + "]");
        }
        sys.p0 = p0;
    }
    return sys;
}

SystemDef load_system(const std::string& path) {
    return parse_system(read_file(path));
}

std::string serialize_system(const SystemDef& sys) {
    json doc;
    json modes = json::array();
    for (const auto& mm : sys.modes) {
        modes.push_back({{"A", matrix_json(mm.A)},
                         {"B", matrix_json(mm.B)},
                         {"C", matrix_json(mm.C)},
                         {"D", matrix_json(mm.D)}});
    }
    doc["modes"] = std::move(modes);
    json pis = json::array();
    for (const auto& pi : sys.transitions.matrices) pis.push_back(matrix_json(pi));
    doc["transition_matrices"] = std::move(pis);
    if (std::holds_alternative<AllSequences>(sys.switching)) {
        doc["switching"] = {{"type", "all"}};
    } else if (const auto* g = std::get_if<GraphSwitching>(&sys.switching)) {
        json edges = json::array();
        for (const auto& [from, to] : g->edges) edges.push_back({from + 1, to + 1});
        doc["switching"] = {{"type", "graph"}, {"edges", edges}};
    } else {
        const auto& p = std::get<PeriodicSwitching>(sys.switching);
        doc["switching"] = {
            {"type", "periodic"}, {"prefix", symbols_json(p.prefix)}, {"period", symbols_json(p.period)}};
    }
    if (sys.p0) {
        json p0 = json::array();
        for (Eigen::Index i = 0; i < sys.p0->size(); ++i) p0.push_back((*sys.p0)(i));
        doc["p0"] = std::move(p0);
    }
    return doc.dump(2);
}

bool positivity_hypothesis(const SystemDef& sys) {
    std::set<Word> used;
    try {
        used = enumerate_words(sys.switching, 1, sys.num_symbols());
    } catch (const SwitchingError&) {
        return false;
    }
    for (const Word& w : used) {
        const Matrix& pi = sys.transitions.matrices[static_cast<std::size_t>(w[0])];
        for (Eigen::Index c = 0; c < pi.cols(); ++c) {
            if (!(pi.col(c).array() > 0.0).any()) return false;
        }
    }
    if (sys.p0 && !(sys.p0->array() > 0.0).all()) return false;
    return true;
}

ValidationReport validate_system(const SystemDef& sys) {
    ValidationReport rep;
    std::ostringstream os;
    if (sys.modes.empty()) {
        rep.add(Severity::Error, "no-modes", "system has no modes");
        return rep;
    }
    const auto n = sys.state_dim(), m = sys.input_dim(), p = sys.output_dim();
    const auto N = static_cast<Eigen::Index>(sys.num_modes());
    for (std::size_t i = 0; i < sys.modes.size(); ++i) {
        const auto& mm = sys.modes[i];
        const std::string tag = "mode " + std::to_string(i + 1);
        if (mm.A.rows() != n || mm.A.cols() != n || mm.B.rows() != n || mm.B.cols() != m ||
            mm.C.rows() != p || mm.C.cols() != n || mm.D.rows() != p || mm.D.cols() != m) {
            rep.add(Severity::Error, "dimension-mismatch", tag + ": inconsistent matrix shapes");
            continue;
        }
        if (!mm.A.allFinite() || !mm.B.allFinite() || !mm.C.allFinite() || !mm.D.allFinite()) {
            rep.add(Severity::Error, "non-finite", tag + ": non-finite matrix entry");
        }
    }
    if (sys.transitions.matrices.empty()) {
        rep.add(Severity::Error, "no-transitions", "no transition matrices");
        return rep;
    }
    for (std::size_t s = 0; s < sys.transitions.matrices.size(); ++s) {
        const Matrix& pi = sys.transitions.matrices[s];
        const std::string tag = "Pi(" + std::to_string(s + 1) + ")";
        if (pi.rows() != N || pi.cols() != N) {
            rep.add(Severity::Error, "dimension-mismatch", tag + ": expected " + std::to_string(N) +
                                                               "x" + std::to_string(N));
            continue;
        }
        for (Eigen::Index r = 0; r < N; ++r) {
            for (Eigen::Index c = 0; c < N; ++c) {
                if (!std::isfinite(pi(r, c)) || pi(r, c) < 0.0) {
                    std::ostringstream msg;
                    msg << tag << " entry (" << r + 1 << "," << c + 1 << ") = " << pi(r, c)
                        << " is negative";
                    rep.add(Severity::Error, "negative-entry", msg.str());
                }
            }
            const double sum = pi.row(r).sum();
            if (!(std::abs(sum - 1.0) <= kRowSumTol)) {
                std::ostringstream msg;
                msg << tag << " row " << r + 1 << ": row sum " << sum << " ≠ 1";
                rep.add(Severity::Error, "row-sum", msg.str());
            }
        }
    }
    try {
        const auto norm = normalized(sys.switching, sys.num_symbols());
        if (const auto* g = std::get_if<GraphSwitching>(&sys.switching)) {
            const auto& pruned = std::get<GraphSwitching>(norm);
            if (pruned.edges.size() != g->edges.size()) {
                rep.add(Severity::Warning, "graph-pruned",
                        "switching graph: removed " + std::to_string(g->edges.size() - pruned.edges.size()) +
                            " edge(s) touching nodes without an infinite extension");
            }
        }
    } catch (const SwitchingError& e) {
        rep.add(Severity::Error, "switching", e.what());
    }
    if (sys.p0) {
        if (sys.p0->size() != N) {
            rep.add(Severity::Error, "dimension-mismatch", "p0: expected " + std::to_string(N) + " entries");
        } else {
            if ((sys.p0->array() < 0.0).any() || !sys.p0->allFinite()) {
                rep.add(Severity::Error, "p0-negative", "p0 has a negative entry");
            }
            if (!(std::abs(sys.p0->sum() - 1.0) <= kRowSumTol)) {
                std::ostringstream msg;
                msg << "p0: sum " << sys.p0->sum() << " ≠ 1";
                rep.add(Severity::Error, "p0-sum", msg.str());
            }
        }
    } else {
        rep.p0_assumed_uniform = true;
        rep.add(Severity::Info, "p0-unknown", "unknown initial distribution; assuming uniform p0");
    }
    if (!rep.ok) return rep;

    rep.positivity_hypothesis = positivity_hypothesis(sys);
    if (!rep.positivity_hypothesis) {
        rep.add(Severity::Warning, "positivity",
                "some mode has zero probability at some time (a reachable transition matrix has a "
                "zero column or p0 has a zero entry); contractiveness certification is unavailable");
    }
    return rep;
}

}  // namespace smjls
