#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace smjls {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of `content`.
std::string sha256_hex(const std::string& content);

/// The single structured record every CLI run emits. Without timings the
/// serialized report is a deterministic function of inputs, seed and backend.
struct RunReport {
    std::string command;
    std::map<std::string, std::string> input_digests;  // file path -> sha256
    std::string outcome;
    int exit_code = 0;
    std::string backend;
    std::map<std::string, double> tolerances;
    nlohmann::json details = nlohmann::json::object();
    std::optional<std::map<std::string, double>> timings_ms;

    nlohmann::json to_json() const;
    std::string dump() const { return to_json().dump(2) + "\n"; }
};

}  // namespace smjls
