#include <smjls/certificate_io.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json_io.hpp"

namespace smjls {

using nlohmann::json;
using namespace detail;

namespace {

// Infinite constants (a certificate without decay margins) are stored as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    return parse_number(v, path + "." + key);
}

}  // namespace

std::string certificate_to_json(const Certificate& cert) {
    json doc;
    doc["kind"] = to_string(cert.kind);
    doc["M"] = cert.M;
    doc["margin"] = cert.margin;
    doc["eta"] = cert.eta;
    doc["rho"] = cert.rho;
    doc["nu"] = cert.nu;
    doc["c"] = number_or_null(cert.c);
    doc["lambda"] = cert.lambda;
    if (cert.gamma) doc["gamma"] = *cert.gamma;
    if (cert.stability_nu) doc["stability_nu"] = *cert.stability_nu;
    doc["normalization"] = cert.normalization;
    doc["solver"] = {{"backend", cert.solver.backend},
                     {"status", cert.solver.status},
                     {"iterations", cert.solver.iterations},
                     {"t_star", cert.solver.t_star},
                     {"relative_gap", cert.solver.relative_gap}};
    json xs = json::array();
    for (const auto& [key, X] : cert.X) {
        xs.push_back({{"mode", key.first + 1}, {"word", symbols_json(key.second.symbols)},
                      {"matrix", matrix_json(X.mat())}});
    }
    doc["X"] = std::move(xs);
    return doc.dump(2) + "\n";
}

Certificate parse_certificate(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("$", "expected an object");
    Certificate cert;
    const json& kind = require(doc, "kind", "$");
    if (!kind.is_string()) throw SchemaError("$.kind", "expected a string");
    try {
        cert.kind = parse_lmi_kind(kind.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw SchemaError("$.kind", e.what());
    }
    const json& M = require(doc, "M", "$");
    if (!M.is_number_integer() || M.get<long long>() < 0) {
        throw SchemaError("$.M", "expected a nonnegative integer");
    }
    cert.M = M.get<int>();
    cert.margin = parse_number(require(doc, "margin", "$"), "$.margin");
    cert.eta = parse_number(require(doc, "eta", "$"), "$.eta");
    cert.rho = parse_number(require(doc, "rho", "$"), "$.rho");
    cert.nu = parse_number(require(doc, "nu", "$"), "$.nu");
    cert.c = number_or_inf(doc, "c", "$");
    cert.lambda = parse_number(require(doc, "lambda", "$"), "$.lambda");
    if (doc.contains("gamma")) cert.gamma = parse_number(doc["gamma"], "$.gamma");
    if (doc.contains("stability_nu")) cert.stability_nu = parse_number(doc["stability_nu"], "$.stability_nu");
    if (doc.contains("normalization")) cert.normalization = parse_number(doc["normalization"], "$.normalization");
    if (doc.contains("solver") && doc["solver"].is_object()) {
        const json& s = doc["solver"];
        cert.solver.backend = s.value("backend", "");
        cert.solver.status = s.value("status", "");
        cert.solver.iterations = s.value("iterations", 0);
        cert.solver.t_star = s.value("t_star", 0.0);
        cert.solver.relative_gap = s.value("relative_gap", 0.0);
    }
    const json& xs = require(doc, "X", "$");
    if (!xs.is_array()) throw SchemaError("$.X", "expected an array");
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const std::string path = "$.X[" + std::to_string(k) + "]";
        const int mode = parse_symbol(require(xs[k], "mode", path), path + ".mode");
        Word word(parse_symbols(require(xs[k], "word", path), path + ".word"));
        if (static_cast<int>(word.size()) != cert.M) {
            throw SchemaError(path + ".word", "expected a word of length " + std::to_string(cert.M));
        }
        const Matrix m = parse_matrix(require(xs[k], "matrix", path), path + ".matrix");
        if (m.rows() != m.cols()) throw SchemaError(path + ".matrix", "expected a square matrix");
        const double scale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
        if (m.size() && (m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
            throw SchemaError(path + ".matrix", "expected a symmetric matrix");
        }
        if (!cert.X.emplace(VariableKey{mode, word}, SymMatrix(m)).second) {
            throw SchemaError(path, "duplicate entry for mode " + std::to_string(mode + 1) + ", word " +
                                        to_string(word));
        }
    }
    return cert;
}

Certificate load_certificate(const std::string& path) { return parse_certificate(read_file(path)); }

void save_certificate(const Certificate& cert, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write certificate to " + path);
    out << certificate_to_json(cert);
    if (!out) throw std::runtime_error("failed writing certificate to " + path);
}

}  // namespace smjls
