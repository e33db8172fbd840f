#include "json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <smjls/model.hpp>

namespace smjls::detail {

double parse_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "non-finite number");
    return v;
}

Matrix parse_matrix(const json& j, const std::string& path, Eigen::Index cols_if_empty) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of rows");
    if (j.empty()) return Matrix(0, cols_if_empty);
    Eigen::Index cols = -1;
    Matrix m;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rpath = path + "[" + std::to_string(r) + "]";
        const json& row = j[r];
        if (!row.is_array()) throw SchemaError(rpath, "expected an array of numbers");
        if (cols < 0) {
            cols = static_cast<Eigen::Index>(row.size());
            m.resize(static_cast<Eigen::Index>(j.size()), cols);
        } else if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw SchemaError(rpath, "ragged matrix: expected " + std::to_string(cols) + " entries");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_number(row[c], rpath + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "." + key, "missing required key");
    return *it;
}

int parse_symbol(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected a 1-based integer symbol");
    const auto v = j.get<long long>();
    if (v < 1) throw SchemaError(path, "symbols are 1-based");
    return static_cast<int>(v - 1);
}

std::vector<int> parse_symbols(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of symbols");
    std::vector<int> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(parse_symbol(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json symbols_json(const std::vector<int>& s) {
    json a = json::array();
    for (int v : s) a.push_back(v + 1);
    return a;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace smjls::detail
