#include <gtest/gtest.h>

#include <random>

#include <smjls/linalg.hpp>
#include <smjls/model.hpp>

#include "test_support.hpp"

using namespace smjls;
using smjls::testing::data_path;

namespace {

const char* kTwoModeDoc = R"({
  "modes": [
    {"A": [[0.5, 0.0], [0.0, 0.5]], "B": [[1.0], [0.0]], "C": [[1.0, 0.0]], "D": [[0.0]]},
    {"A": [[0.1, 0.2], [0.0, 0.3]], "B": [[0.0], [1.0]], "C": [[0.0, 1.0]], "D": [[0.1]]}
  ],
  "transition_matrices": [[[0.5, 0.5], [0.2, 0.8]]],
  "switching": {"type": "all"},
  "p0": [0.25, 0.75]
})";

bool has_code(const ValidationReport& rep, const std::string& code) {
    for (const auto& f : rep.findings)
        if (f.code == code) return true;
    return false;
}

}  // namespace

TEST(SymMatrixTest, ConstructionSymmetrizes) {
    Matrix m(2, 2);
    m << 1.0, 2.0, 0.0, 3.0;
    SymMatrix s(m);
    EXPECT_DOUBLE_EQ(s.mat()(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(s.mat()(1, 0), 1.0);
    EXPECT_EQ(s.mat(), s.mat().transpose());
}

TEST(SymMatrixTest, EigenvaluesAscending) {
    Matrix m(3, 3);
    m << 2, 0, 0, 0, -1, 0, 0, 0, 5;
    Vector ev = sym_eigenvalues(m);
    EXPECT_DOUBLE_EQ(ev(0), -1.0);
    EXPECT_DOUBLE_EQ(ev(2), 5.0);
    EXPECT_DOUBLE_EQ(SymMatrix(m).min_eigenvalue(), -1.0);
    EXPECT_DOUBLE_EQ(SymMatrix(m).max_eigenvalue(), 5.0);
    EXPECT_DOUBLE_EQ(SymMatrix::identity(4, 2.5).max_eigenvalue(), 2.5);
}

TEST(ModelTest, ParsesExampleOne) {
    SystemDef sys = load_system(data_path("example1.json"));
    EXPECT_EQ(sys.num_modes(), 2);
    EXPECT_EQ(sys.num_symbols(), 2);
    EXPECT_EQ(sys.state_dim(), 3);
    EXPECT_EQ(sys.input_dim(), 2);
    EXPECT_EQ(sys.output_dim(), 3);
    EXPECT_DOUBLE_EQ(sys.modes[1].B(0, 1), -0.75);
    EXPECT_DOUBLE_EQ(sys.transitions.prob(1, 0, 1), 0.99);
    ValidationReport rep = validate_system(sys);
    EXPECT_TRUE(rep.ok);
    EXPECT_TRUE(rep.positivity_hypothesis);
}

TEST(ModelTest, ParsesExampleTwoGraph) {
    SystemDef sys = load_system(data_path("example2.json"));
    const auto* g = std::get_if<GraphSwitching>(&sys.switching);
    ASSERT_NE(g, nullptr);
    EXPECT_EQ(g->edges.size(), 3u);
    EXPECT_TRUE(g->edges.count({1, 0}));
    EXPECT_FALSE(g->edges.count({1, 1}));
    EXPECT_TRUE(validate_system(sys).ok);
}

TEST(ModelTest, DimensionMismatchNamesPath) {
    std::string doc = kTwoModeDoc;
    doc.replace(doc.find("\"C\": [[0.0, 1.0]]"), 17, "\"C\": [[0.0, 1.0, 2.0]]");
    try {
        parse_system(doc);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.path(), "modes[1].C");
    }
}

TEST(ModelTest, RejectsNonJsonTokens) {
    std::string doc = kTwoModeDoc;
    doc.replace(doc.find("0.25"), 4, "NaN");
    EXPECT_THROW(parse_system(doc), SchemaError);
}

TEST(ModelTest, MissingP0AssumedUniform) {
    std::string doc = kTwoModeDoc;
    doc.replace(doc.find(",\n  \"p0\""), std::string(",\n  \"p0\": [0.25, 0.75]").size(), "");
    SystemDef sys = parse_system(doc);
    EXPECT_FALSE(sys.p0.has_value());
    EXPECT_TRUE(sys.initial_distribution().isApprox(Vector::Constant(2, 0.5)));
    ValidationReport rep = validate_system(sys);
    EXPECT_TRUE(rep.ok);
    EXPECT_TRUE(rep.p0_assumed_uniform);
    EXPECT_TRUE(has_code(rep, "p0-unknown"));
}

TEST(ModelTest, RowSumErrorReportsValue) {
    SystemDef sys = parse_system(kTwoModeDoc);
    sys.transitions.matrices[0](0, 1) = 0.4;
    ValidationReport rep = validate_system(sys);
    EXPECT_FALSE(rep.ok);
    bool found = false;
    for (const auto& f : rep.findings) {
        if (f.code == "row-sum") {
            found = true;
            EXPECT_NE(f.message.find("row sum 0.9"), std::string::npos) << f.message;
            EXPECT_EQ(f.severity, Severity::Error);
        }
    }
    EXPECT_TRUE(found);
}

TEST(ModelTest, TinyNegativeEntriesClampedOnParse) {
    std::string doc = kTwoModeDoc;
    doc.replace(doc.find("[[0.5, 0.5], [0.2, 0.8]]"), 24, "[[1.0, -1e-13], [0.2, 0.8]]");
    SystemDef sys = parse_system(doc);
    EXPECT_EQ(sys.transitions.prob(0, 0, 1), 0.0);
    doc = kTwoModeDoc;
    doc.replace(doc.find("[[0.5, 0.5], [0.2, 0.8]]"), 24, "[[1.1, -0.1], [0.2, 0.8]]");
    EXPECT_TRUE(has_code(validate_system(parse_system(doc)), "negative-entry"));
}

TEST(ModelTest, ZeroColumnDisablesPositivityOnly) {
    SystemDef sys = parse_system(kTwoModeDoc);
    sys.transitions.matrices[0] << 1.0, 0.0, 1.0, 0.0;
    ValidationReport rep = validate_system(sys);
    EXPECT_TRUE(rep.ok);
    EXPECT_FALSE(rep.positivity_hypothesis);
    EXPECT_TRUE(has_code(rep, "positivity"));
}

TEST(ModelTest, ZeroP0EntryDisablesPositivity) {
    SystemDef sys = parse_system(kTwoModeDoc);
    sys.p0 = Vector(2);
    *sys.p0 << 1.0, 0.0;
    EXPECT_FALSE(positivity_hypothesis(sys));
    EXPECT_TRUE(validate_system(sys).ok);
}

TEST(ModelTest, UnusedSymbolZeroColumnIgnored) {
    // Pi(2) has a zero column but periodic switching only ever uses Pi(1).
    SystemDef sys = parse_system(kTwoModeDoc);
    Matrix bad(2, 2);
    bad << 1.0, 0.0, 1.0, 0.0;
    sys.transitions.matrices.push_back(bad);
    sys.switching = PeriodicSwitching{{}, {0}};
    EXPECT_TRUE(positivity_hypothesis(sys));
    sys.switching = AllSequences{};
    EXPECT_FALSE(positivity_hypothesis(sys));
}

TEST(ModelProperty, SerializeRoundTripIsIdempotent) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        smjls::testing::SystemShape shape;
        shape.N = 1 + trial % 3;
        shape.J = 1 + trial % 2;
        shape.n = 1 + trial % 4;
        shape.m = 1 + trial % 2;
        shape.p = 1 + trial % 3;
        SystemDef sys = smjls::testing::random_system(rng, shape);
        if (trial % 3 == 0) sys.p0 = Vector::Constant(shape.N, 1.0 / shape.N);
        if (trial % 4 == 1) sys.switching = PeriodicSwitching{{0}, {shape.J - 1}};
        const std::string once = serialize_system(sys);
        SystemDef back = parse_system(once);
        EXPECT_TRUE(back == sys) << "trial " << trial;
        EXPECT_EQ(serialize_system(back), once);
    }
}

TEST(ModelProperty, ValidateDoesNotMutate) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        SystemDef sys = smjls::testing::random_system(rng, {2, 2, 2, 1, 1});
        const SystemDef copy = sys;
        validate_system(sys);
        positivity_hypothesis(sys);
        EXPECT_TRUE(sys == copy);
    }
}

TEST(ModelProperty, PositivityMonotoneUnderColumnFill) {
    // Making a zero entry positive can only turn positivity on, never off.
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        SystemDef sys = smjls::testing::random_system(rng, {3, 2, 1, 1, 1});
        for (auto& P : sys.transitions.matrices) P = smjls::testing::random_stochastic(rng, 3, 0.6);
        const bool before = positivity_hypothesis(sys);
        auto& P = sys.transitions.matrices[static_cast<std::size_t>(trial % 2)];
        const int r = pick(rng);
        P.row(r) = 0.5 * P.row(r) + 0.5 * Eigen::RowVectorXd::Constant(3, 1.0 / 3.0);
        if (before) {
            EXPECT_TRUE(positivity_hypothesis(sys)) << "trial " << trial;
        }
    }
}
