#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include <smjls/linalg.hpp>

namespace smjls::detail {

using nlohmann::json;

double parse_number(const json& j, const std::string& path);

/// Row-major array of arrays. A matrix with zero rows takes `cols_if_empty`
/// columns.
Matrix parse_matrix(const json& j, const std::string& path, Eigen::Index cols_if_empty = 0);

const json& require(const json& obj, const char* key, const std::string& path);

int parse_symbol(const json& j, const std::string& path);
std::vector<int> parse_symbols(const json& j, const std::string& path);

json matrix_json(const Matrix& m);
json symbols_json(const std::vector<int>& s);

std::string read_file(const std::string& path);

}  // namespace smjls::detail
