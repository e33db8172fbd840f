#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <smjls/certificate_io.hpp>
#include <smjls/lmi.hpp>
#include <smjls/operators.hpp>

#include "test_support.hpp"

using namespace smjls;
namespace st = smjls::testing;

namespace {

class FailingBackend final : public sdp::Backend {
public:
    std::string name() const override { return "failing"; }
    sdp::Result solve(const sdp::Problem&) const override {
        sdp::Result r;
        r.status = sdp::Status::Failure;
        r.message = "forced breakdown";
        return r;
    }
};

SystemDef with_switching(SystemDef sys, SwitchingStructure s) {
    sys.switching = std::move(s);
    return sys;
}

const Certificate& example2_certificate() {
    static const Certificate cert = [] {
        CertifyResult r = certify(st::example2(), LmiKind::Stability, 2);
        if (!r.found()) throw std::runtime_error("example2 certificate not found");
        return *r.certificate;
    }();
    return cert;
}

const Certificate& example1_brl_certificate() {
    static const Certificate cert = [] {
        FeasibilityOutcome out = solve_feasibility(build_brl_lmi(st::example1(), 1));
        if (!out.feasible()) throw std::runtime_error("example1 BRL certificate not found");
        return *out.certificate;
    }();
    return cert;
}

}  // namespace

TEST(LmiBuildTest, ExampleTwoCounts) {
    LmiProblem p = build_stability_lmi(st::example2(), 1);
    // Psi_1 = {(1), (2)}, Psi_2 = {(1,1), (1,2), (2,1)}
    EXPECT_EQ(p.num_variables(), 4);
    EXPECT_EQ(p.num_blocks(), 6);
    EXPECT_EQ(p.block_dim(), 3);
}

TEST(LmiBuildTest, ExampleOneBrlCounts) {
    LmiProblem p = build_brl_lmi(st::example1(), 0);
    EXPECT_EQ(p.num_variables(), 2);
    EXPECT_EQ(p.num_blocks(), 4);
    EXPECT_EQ(p.block_dim(), 5);
}

TEST(LmiBuildTest, CountsAreModesTimesWords) {
    SystemDef sys = st::example1();
    for (int M = 0; M <= 3; ++M) {
        LmiProblem p = build_stability_lmi(sys, M);
        EXPECT_EQ(p.num_variables(), 2 * static_cast<int>(enumerate_words(sys.switching, M, 2).size()));
        EXPECT_EQ(p.num_blocks(), 2 * static_cast<int>(enumerate_words(sys.switching, M + 1, 2).size()));
    }
}

TEST(LmiBuildTest, SingleSymbolGivesClassicalCoupledInequalities) {
    std::mt19937_64 rng(51);
    SystemDef sys = st::random_system(rng, {3, 1, 2, 1, 1});
    for (int M = 0; M <= 3; ++M) {
        LmiProblem p = build_stability_lmi(sys, M);
        EXPECT_EQ(p.num_variables(), 3);
        ASSERT_EQ(p.num_blocks(), 3);
        std::vector<SymMatrix> Z;
        for (int i = 0; i < 3; ++i) Z.push_back(st::random_spd(rng, 2));
        for (int b = 0; b < 3; ++b) {
            const int i = p.blocks[static_cast<std::size_t>(b)].mode;
            const Matrix& A = sys.modes[static_cast<std::size_t>(i)].A;
            Matrix blended = Matrix::Zero(2, 2);
            for (int j = 0; j < 3; ++j) blended += sys.transitions.prob(0, i, j) * Z[static_cast<std::size_t>(j)].mat();
            Matrix expected = A.transpose() * blended * A - Z[static_cast<std::size_t>(i)].mat();
            std::vector<SymMatrix> X(3);
            for (int v = 0; v < 3; ++v) X[static_cast<std::size_t>(v)] = Z[static_cast<std::size_t>(p.variables[static_cast<std::size_t>(v)].first)];
            EXPECT_LT(st::rel_residual(p.evaluate_block(b, X).mat(), expected), 1e-14);
        }
    }
}

TEST(LmiBuildTest, BrlBlockDelegatesToOperatorB) {
    std::mt19937_64 rng(52);
    SystemDef sys = st::example1();
    LmiProblem p = build_brl_lmi(sys, 1);
    std::vector<SymMatrix> X;
    for (int v = 0; v < p.num_variables(); ++v) X.push_back(st::random_spd(rng, 3, 0.1, 0.3));
    for (int b = 0; b < p.num_blocks(); ++b) {
        const BlockDescriptor& d = p.blocks[static_cast<std::size_t>(b)];
        std::vector<SymMatrix> suffix;
        for (int v : d.suffix_vars) suffix.push_back(X[static_cast<std::size_t>(v)]);
        SymMatrix expected = op_B(sys, d.mode, blend(sys, d.mode, d.head, suffix), X[static_cast<std::size_t>(d.prefix_var)]);
        EXPECT_LT(st::rel_residual(p.evaluate_block(b, X).mat(), expected.mat()), 1e-14);
    }
}

TEST(LmiBuildTest, BrlLeadingBlockIsStabilityBlockPlusOutputTerm) {
    std::mt19937_64 rng(53);
    SystemDef sys = st::example1();
    for (int M = 0; M <= 2; ++M) {
        LmiProblem brl = build_brl_lmi(sys, M);
        LmiProblem stab = build_stability_lmi(sys, M);
        ASSERT_EQ(brl.variables, stab.variables);
        ASSERT_EQ(brl.num_blocks(), stab.num_blocks());
        std::vector<SymMatrix> X;
        for (int v = 0; v < brl.num_variables(); ++v) X.push_back(st::random_spd(rng, 3));
        for (int b = 0; b < brl.num_blocks(); ++b) {
            const auto& d = brl.blocks[static_cast<std::size_t>(b)];
            ASSERT_EQ(d.word, stab.blocks[static_cast<std::size_t>(b)].word);
            const Matrix& C = sys.modes[static_cast<std::size_t>(d.mode)].C;
            Matrix lead = brl.evaluate_block(b, X).mat().topLeftCorner(3, 3);
            EXPECT_LT(st::rel_residual(lead, stab.evaluate_block(b, X).mat() + C.transpose() * C), 1e-13);
        }
    }
}

TEST(LmiBuildTest, BrlRefusesWithoutPositivity) {
    SystemDef sys = st::example1();
    sys.transitions.matrices[1] << 0.0, 1.0, 0.0, 1.0;
    EXPECT_THROW(build_brl_lmi(sys, 0), HypothesisViolation);
    EXPECT_NO_THROW(build_stability_lmi(sys, 0));
}

TEST(LmiBuildTest, GainScalesOutput) {
    LmiProblem p = build_brl_lmi(st::example1(), 0, 2.0);
    EXPECT_DOUBLE_EQ(p.gamma, 2.0);
    EXPECT_TRUE(p.sys.modes[0].C.isApprox(st::example1().modes[0].C / 2.0));
}

TEST(LmiSolveTest, ScalarLyapunov) {
    FeasibilityOutcome out = solve_feasibility(build_stability_lmi(st::scalar_system(0.5), 0));
    ASSERT_TRUE(out.feasible()) << out.reason;
    EXPECT_GE(out.certificate->eta, 1.0 - 1e-9);
    EXPECT_GE(out.certificate->nu, kDefaultMarginThreshold);
    EXPECT_FALSE(solve_feasibility(build_stability_lmi(st::scalar_system(1.01), 0)).feasible());
}

TEST(LmiSolveTest, ExampleOneBrlNeedsWindowOne) {
    SystemDef sys = st::example1();
    FeasibilityOutcome m0 = solve_feasibility(build_brl_lmi(sys, 0));
    EXPECT_EQ(m0.kind, FeasibilityOutcome::Kind::Infeasible);
    EXPECT_LT(m0.best_t, kDefaultMarginThreshold);
    const Certificate& cert = example1_brl_certificate();
    EXPECT_EQ(cert.M, 1);
    VerificationReport rep = verify_certificate(sys, cert);
    EXPECT_TRUE(rep.passed) << rep.message;
    EXPECT_LE(rep.max_block_eigenvalue, -5e-8);
    ASSERT_TRUE(cert.stability_nu.has_value());
    EXPECT_GT(*cert.stability_nu, 0.0);
}

TEST(LmiSolveTest, LargeGainFeasibleWhenStable) {
    FeasibilityOutcome out = solve_feasibility(build_brl_lmi(st::example1(), 0, 1e6));
    EXPECT_TRUE(out.feasible()) << out.reason;
}

TEST(LmiSolveTest, SolverFailurePropagatesWindow) {
    FeasibilityOptions opts;
    opts.backend = std::make_shared<FailingBackend>();
    EXPECT_EQ(solve_feasibility(build_stability_lmi(st::example2(), 0), opts).kind,
              FeasibilityOutcome::Kind::SolverFailure);
    try {
        certify(st::example2(), LmiKind::Stability, 2, opts);
        FAIL() << "expected SolverFailureError";
    } catch (const SolverFailureError& e) {
        EXPECT_EQ(e.M(), 0);
    }
}

TEST(CertifyTest, ExampleTwoGraphNeedsWindowOne) {
    const Certificate& cert = example2_certificate();
    EXPECT_EQ(cert.M, 1);
    EXPECT_EQ(cert.kind, LmiKind::Stability);
    EXPECT_GE(cert.eta, 1.0 - 1e-9);
    EXPECT_GE(cert.rho, cert.eta);
    EXPECT_GT(cert.nu, 0.0);
    EXPECT_GE(cert.lambda, 0.0);
    EXPECT_LT(cert.lambda, 1.0);
    EXPECT_TRUE(verify_certificate(st::example2(), cert).passed);
}

TEST(CertifyTest, ModeOneOnlyIsStableAtZero) {
    CertifyResult r = certify(load_system(st::data_path("example2_psi1.json")), LmiKind::Stability, 0);
    ASSERT_TRUE(r.found());
    EXPECT_EQ(r.certificate->M, 0);
}

TEST(CertifyTest, ModeTwoOnlyIsConclusivelyUnstable) {
    CertifyResult r = certify(load_system(st::data_path("example2_psi2.json")), LmiKind::Stability, 3);
    EXPECT_FALSE(r.found());
    EXPECT_TRUE(r.conclusive_negative);
    ASSERT_EQ(r.records.size(), 4u);
    for (const auto& rec : r.records) EXPECT_EQ(rec.outcome, FeasibilityOutcome::Kind::Infeasible);
}

TEST(CertifyTest, GraphInfeasibilityIsNotConclusive) {
    CertifyResult r = certify(st::example2(), LmiKind::Stability, 0);
    EXPECT_FALSE(r.found());
    EXPECT_FALSE(r.conclusive_negative);
}

TEST(CertifyTest, NilpotentModesAtZero) {
    std::mt19937_64 rng(54);
    SystemDef sys = st::random_system(rng, {3, 2, 3, 1, 1});
    for (auto& m : sys.modes) m.A.setZero();
    CertifyResult r = certify(sys, LmiKind::Stability, 2);
    ASSERT_TRUE(r.found());
    EXPECT_EQ(r.certificate->M, 0);
}

TEST(VerifyTest, DetectsZeroedEntry) {
    Certificate cert = example2_certificate();
    auto it = std::next(cert.X.begin());
    cert.X[it->first] = SymMatrix::zero(3);
    VerificationReport rep = verify_certificate(st::example2(), cert);
    EXPECT_FALSE(rep.passed);
    EXPECT_GT(rep.max_block_eigenvalue, 0.0);
    EXPECT_NE(rep.message.find("mode"), std::string::npos) << rep.message;
    EXPECT_NE(rep.message.find(to_string(rep.worst_word)), std::string::npos) << rep.message;
}

TEST(VerifyTest, RejectsWrongIndexSet) {
    Certificate cert = example2_certificate();
    cert.X.erase(cert.X.begin());
    EXPECT_THROW(verify_certificate(st::example2(), cert), std::invalid_argument);
    Certificate extra = example2_certificate();
    extra.X.emplace(VariableKey{0, Word({1, 1})}, SymMatrix::identity(3));
    EXPECT_THROW(verify_certificate(st::example2(), extra), std::invalid_argument);
}

TEST(VerifyTest, JsonRoundTripIsBitExact) {
    for (const Certificate* c : {&example2_certificate(), &example1_brl_certificate()}) {
        Certificate back = parse_certificate(certificate_to_json(*c));
        ASSERT_EQ(back.X.size(), c->X.size());
        for (const auto& [key, X] : c->X) EXPECT_EQ(back.X.at(key).mat(), X.mat());
        EXPECT_EQ(back.kind, c->kind);
        EXPECT_EQ(back.M, c->M);
        EXPECT_EQ(back.gamma, c->gamma);
        EXPECT_EQ(back.margin, c->margin);
        SystemDef sys = c->kind == LmiKind::Brl ? st::example1() : st::example2();
        VerificationReport a = verify_certificate(sys, *c), b = verify_certificate(sys, back);
        EXPECT_EQ(a.max_block_eigenvalue, b.max_block_eigenvalue);
        EXPECT_EQ(a.passed, b.passed);
        EXPECT_EQ(certificate_to_json(back), certificate_to_json(*c));
    }
}

TEST(VerifyTest, ParseErrorsNamePath) {
    std::string doc = certificate_to_json(example2_certificate());
    const auto pos = doc.find("\"word\"");
    ASSERT_NE(pos, std::string::npos);
    std::string bad = doc;
    bad.replace(bad.find('[', pos), 1, "[9,");
    EXPECT_THROW(parse_certificate(bad), SchemaError);
    EXPECT_THROW(parse_certificate("{}"), SchemaError);
}

TEST(LmiProperty, HomogeneousReindexing) {
    // With one symbol, an M = 0 certificate copied onto the single word of
    // any length is again a certificate.
    std::mt19937_64 rng(55);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        SystemDef sys = st::random_system(rng, {2, 1, 2, 1, 1}, 0.8);
        FeasibilityOutcome out = solve_feasibility(build_stability_lmi(sys, 0));
        if (!out.feasible()) continue;
        ++checked;
        for (int M = 1; M <= 3; ++M) {
            Certificate c = *out.certificate;
            c.M = M;
            c.X.clear();
            for (const auto& [key, X] : out.certificate->X) c.X.emplace(VariableKey{key.first, Word(std::vector<int>(M, 0))}, X);
            VerificationReport rep = verify_certificate(sys, c);
            EXPECT_TRUE(rep.passed) << rep.message;
            EXPECT_DOUBLE_EQ(rep.max_block_eigenvalue, verify_certificate(sys, *out.certificate).max_block_eigenvalue);
        }
    }
    EXPECT_GT(checked, 5);
}

TEST(LmiProperty, StabilityScaleInvariance) {
    const Certificate& cert = example2_certificate();
    const double base = verify_certificate(st::example2(), cert).max_block_eigenvalue;
    for (double alpha : {1.5, 10.0, 1e3}) {
        Certificate scaled = cert;
        for (auto& [key, X] : scaled.X) X = X * alpha;
        scaled.margin = cert.margin * alpha;
        VerificationReport rep = verify_certificate(st::example2(), scaled);
        EXPECT_TRUE(rep.passed) << "alpha " << alpha;
        EXPECT_NEAR(rep.max_block_eigenvalue, alpha * base, 1e-9 * alpha * std::abs(base) + 1e-12);
        EXPECT_NEAR(rep.c, cert.c, 1e-9 * cert.c);
    }
}

TEST(LmiProperty, FeasibleCertificatesVerify) {
    std::mt19937_64 rng(56);
    int feasible = 0;
    for (int trial = 0; trial < 12; ++trial) {
        SystemDef sys = st::random_system(rng, {2, 2, 2, 1, 1}, 0.75, 0.3, 0.3);
        LmiKind kind = trial % 2 ? LmiKind::Brl : LmiKind::Stability;
        FeasibilityOutcome out = solve_feasibility(build_lmi(sys, kind, trial % 3 == 0 ? 1 : 0));
        if (!out.feasible()) continue;
        ++feasible;
        VerificationReport rep = verify_certificate(sys, *out.certificate);
        EXPECT_TRUE(rep.passed) << rep.message;
        EXPECT_LE(rep.max_block_eigenvalue, -out.certificate->margin / 2);
        EXPECT_GE(out.certificate->eta, out.certificate->normalization * (1 - 1e-9));
    }
    EXPECT_GT(feasible, 3);
}

TEST(GainTest, StaticGainIsLargestSingularValue) {
    std::mt19937_64 rng(57);
    SystemDef sys = st::random_system(rng, {1, 1, 2, 2, 2});
    sys.modes[0].A.setZero();
    sys.modes[0].B.setZero();
    sys.modes[0].C.setZero();
    sys.modes[0].D = st::random_with_norm(rng, 2, 2, 0.7);
    GainOptions opts;
    GainResult g = gain_bisection(sys, 0, opts);
    EXPECT_GE(g.gamma_hat, 0.7 - 1e-6);
    EXPECT_LE(g.gamma_hat, 0.7 + opts.tol);
    EXPECT_TRUE(verify_certificate(sys, g.certificate).passed);
}

TEST(GainTest, ExampleOneContractiveAndMonotoneInWindow) {
    SystemDef sys = st::example1();
    GainOptions opts;
    GainResult g0 = gain_bisection(sys, 0, opts);
    GainResult g1 = gain_bisection(sys, 1, opts);
    EXPECT_LT(g1.gamma_hat, 1.0);
    EXPECT_LE(g1.gamma_hat, g0.gamma_hat + opts.tol);
    EXPECT_GE(g0.gamma_hat, 1.0 - opts.tol);
    ASSERT_TRUE(g1.certificate.gamma.has_value());
    EXPECT_DOUBLE_EQ(*g1.certificate.gamma, g1.gamma_hat);
    EXPECT_TRUE(verify_certificate(sys, g1.certificate).passed);
}

TEST(GainTest, UndefinedWithoutStability) {
    SystemDef sys = st::scalar_system(1.2, 1.0, 1.0, 0.0);
    EXPECT_THROW(gain_bisection(sys, 0), GainBoundError);
    SystemDef big = st::scalar_system(0.0, 0.0, 0.0, 5.0);
    GainOptions opts;
    opts.gamma_max = 2.0;
    EXPECT_THROW(gain_bisection(big, 0, opts), GainBoundError);
}
