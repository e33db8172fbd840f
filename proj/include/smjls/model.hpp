#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <smjls/linalg.hpp>
#include <smjls/switching.hpp>

namespace smjls {

inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kNegativeClampTol = 1e-12;

/// Raised for malformed system documents. The message starts with the
/// offending document path, e.g. "modes[1].C: expected 3 columns".
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ModeMatrices {
    Matrix A;  // n x n
    Matrix B;  // n x m
    Matrix C;  // p x n
    Matrix D;  // p x m

    bool operator==(const ModeMatrices& o) const;
};

/// Transition matrices Pi(1..J), each N x N and row-stochastic.
struct TransitionMatrixSet {
    std::vector<Matrix> matrices;

    int count() const { return static_cast<int>(matrices.size()); }
    /// pi_{ij}(s) with 0-based i, j, s.
    double prob(int s, int i, int j) const { return matrices[s](i, j); }

    bool operator==(const TransitionMatrixSet& o) const;
};

/// A switched Markov jump linear system. Modes and switching symbols are
/// stored 0-based; every external format is 1-based.
struct SystemDef {
    std::vector<ModeMatrices> modes;
    TransitionMatrixSet transitions;
    SwitchingStructure switching;
    std::optional<Vector> p0;

    int num_modes() const { return static_cast<int>(modes.size()); }
    int num_symbols() const { return transitions.count(); }
    Eigen::Index state_dim() const { return modes.front().A.rows(); }
    Eigen::Index input_dim() const { return modes.front().B.cols(); }
    Eigen::Index output_dim() const { return modes.front().C.rows(); }

    /// p0 when given, else the uniform distribution.
    Vector initial_distribution() const;

    /// Exact (bitwise value) equality, including shapes.
    bool operator==(const SystemDef& o) const;
};

enum class Severity { Info, Warning, Error };

struct Finding {
    Severity severity;
    std::string code;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Finding> findings;
    bool positivity_hypothesis = false;
    bool p0_assumed_uniform = false;

    void add(Severity s, std::string code, std::string message);
};

const char* to_string(Severity s);

/// Parses a system document (strict JSON text). Throws SchemaError.
SystemDef parse_system(const std::string& document);
SystemDef load_system(const std::string& path);

/// Canonical JSON text; parse_system(serialize_system(s)) == s.
std::string serialize_system(const SystemDef& sys);

ValidationReport validate_system(const SystemDef& sys);

/// True iff every column of every Pi(s) reachable under the switching
/// structure is nonzero and p0 (when present) is entrywise positive.
bool positivity_hypothesis(const SystemDef& sys);

}  // namespace smjls
