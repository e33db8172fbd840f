#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <smjls/linalg.hpp>

namespace smjls::sdp {

/// Coefficient of one scalar variable inside one diagonal block.
struct BlockEntry {
    int block;
    Matrix coeff;  // symmetric, block_sizes[block] square
};

/// Block-diagonal semidefinite program in inequality form
///
///     maximize    b'y
///     subject to  S(y) = C - sum_k y_k A_k  is positive semidefinite,
///
/// paired with the equality-form problem min <C,Z> s.t. <A_k,Z> = b_k, Z >= 0.
struct Problem {
    std::vector<int> block_sizes;
    std::vector<Matrix> C;                     // one per block
    std::vector<std::vector<BlockEntry>> A;    // one list per variable
    Vector b;
    /// Optional start with S(y0) positive definite; keeps every iterate
    /// exactly feasible for the inequality form.
    std::optional<Vector> y0;

    int num_variables() const { return static_cast<int>(A.size()); }
    /// S(y), per block.
    std::vector<Matrix> slack(const Vector& y) const;
};

enum class Status { Optimal, Inaccurate, Failure };

const char* to_string(Status s);

struct Options {
    double tolerance = 1e-10;          // relative gap and infeasibility for Optimal
    double inaccurate_tolerance = 1e-6;
    int max_iterations = 150;
    double step_fraction = 0.95;
};

struct Result {
    Status status = Status::Failure;
    Vector y;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double relative_gap = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
    std::string message;
};

/// Pluggable semidefinite backend: problem in, status and values out.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual Result solve(const Problem& problem) const = 0;
};

/// Infeasible-start primal-dual path-following method with the HKM search
/// direction and Mehrotra predictor-corrector steps, dense per block.
class InteriorPointBackend final : public Backend {
public:
    explicit InteriorPointBackend(Options options = {}) : options_(options) {}
    std::string name() const override;
    Result solve(const Problem& problem) const override;

private:
    Options options_;
};

std::shared_ptr<const Backend> default_backend();

}  // namespace smjls::sdp
