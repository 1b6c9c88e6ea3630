#include "oracles.hpp"

#include "r0fde/r0_engine.hpp"
#include "r0fde/random_models.hpp"
#include "r0fde/tick_model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace r0fde;

namespace {

NextGenModel scalar_model(double beta, double gamma, double tau = 1.0)
{
    return NextGenModel(DelayLinearOperator(DenseMatrix(1), {{tau, DenseMatrix{{beta}}}}),
                        DelayLinearOperator(DenseMatrix{{gamma}}));
}

tick::TickParams sample_tick()
{
    tick::TickParams p;
    p.b = 3.0;
    p.r = {0.5, 0.4, 0.3, 0.6};
    p.d = {0.1, 0.05, 0.08, 0.1};
    p.tau1 = 2.0;
    p.tau2 = 1.0;
    p.n_cap = 10.0;
    p.h = 5.0;
    return p;
}

Assumption violated(const NextGenModel& m)
{
    try {
        validate(m);
    } catch (const AssumptionViolated& e) {
        return e.which();
    }
    ADD_FAILURE() << "model was accepted";
    return Assumption::A1_Positive;
}

} // namespace

TEST(Validate, TickModelPasses)
{
    const auto m = validate(tick::linearize(sample_tick()));
    EXPECT_TRUE(m.a1_ok);
    EXPECT_TRUE(m.a2_cooperative_ok);
    EXPECT_TRUE(m.a2_stable_ok);
    EXPECT_TRUE(m.validated);
}

TEST(Validate, NamesFailedAssumption)
{
    const NextGenModel negative_f(DelayLinearOperator(DenseMatrix{{-0.5}}), DelayLinearOperator(DenseMatrix{{1.0}}));
    EXPECT_EQ(violated(negative_f), Assumption::A1_Positive);

    const NextGenModel zero_v(DelayLinearOperator(DenseMatrix{{1.0}}), DelayLinearOperator::zero(1));
    EXPECT_EQ(violated(zero_v), Assumption::A2_Stable);

    const NextGenModel non_coop(DelayLinearOperator::zero(2),
                                DelayLinearOperator(DenseMatrix{{1.0, 0.5}, {0.0, 1.0}}));
    EXPECT_EQ(violated(non_coop), Assumption::A2_Cooperative);
}

TEST(Validate, MessageCarriesAssumptionTag)
{
    try {
        validate(NextGenModel(DelayLinearOperator(DenseMatrix{{-0.5}}), DelayLinearOperator(DenseMatrix{{1.0}})));
        FAIL();
    } catch (const AssumptionViolated& e) {
        EXPECT_NE(std::string(e.what()).find("(A1)"), std::string::npos);
        EXPECT_EQ(e.code(), ErrorCode::AssumptionViolated);
    }
}

TEST(Validate, DimensionMismatch)
{
    EXPECT_THROW(NextGenModel(DelayLinearOperator::zero(1), DelayLinearOperator::zero(2)), Error);
}

TEST(R0Direct, Examples)
{
    EXPECT_DOUBLE_EQ(r0_direct(validate(scalar_model(2.0, 1.0))), 2.0);
    EXPECT_DOUBLE_EQ(r0_direct(validate(scalar_model(3.0, 4.0))), 0.75);
    EXPECT_EQ(r0_direct(validate(NextGenModel(DelayLinearOperator::zero(2),
                                              DelayLinearOperator(DenseMatrix::identity(2))))),
              0.0);
    const auto p = sample_tick();
    const double r0 = r0_direct(validate(tick::linearize(p)));
    EXPECT_NEAR(r0, tick::r0_closed_form(p), 1e-12 * r0);
}

TEST(R0Direct, HomogeneousInMu)
{
    random::Rng rng(41);
    for (int k = 0; k < 50; ++k) {
        const auto model = random::nextgen_model(rng);
        const double r0 = r0_direct(model);
        const double mu = random::uniform(rng, 0.1, 10.0);
        EXPECT_NEAR(r0_direct(assess(model.with_f_scaled(mu))), r0 / mu, 1e-12 * r0);
    }
}

TEST(LambdaStar, Examples)
{
    EXPECT_NEAR(lambda_star(validate(scalar_model(1.0, 1.0, 2.7))), 0.0, 1e-10);
    EXPECT_NEAR(lambda_star(validate(scalar_model(2.0, 1.0))), 0.374822528183623381617837317112, 1e-10);
    const double below = lambda_star(validate(scalar_model(1.0, 2.0)));
    EXPECT_LT(below, 0.0);
    EXPECT_NEAR(below, oracle::scalar_principal_root(-2.0, 1.0, 1.0), 1e-9);
}

TEST(LambdaStar, SignMatchesR0OnRandomModels)
{
    random::Rng rng(42);
    for (int k = 0; k < 100; ++k) {
        const auto model = random::nextgen_model(rng);
        const double r0 = r0_direct(model);
        const double lam = lambda_star(model);
        EXPECT_EQ(sign_with_band(r0 - 1.0), sign_with_band(lam)) << "R0=" << r0 << " lambda*=" << lam;
    }
}

TEST(R0Bisection, ScalarModel)
{
    const auto model = validate(scalar_model(2.0, 1.0));
    const auto res = r0_bisection(model, 1.0, 128);
    EXPECT_NEAR(res.mu, 2.0, 1e-3);
    EXPECT_FALSE(res.probes.empty());
}

TEST(R0Bisection, TickModel)
{
    const auto p = sample_tick();
    const auto model = validate(tick::linearize(p));
    const auto res = r0_bisection(model, p.max_delay(), 128);
    EXPECT_NEAR(res.mu, tick::r0_closed_form(p), 1e-3);
}

TEST(R0Bisection, RadiusIsOneAtDirectValue)
{
    const auto model = validate(scalar_model(2.0, 1.0));
    EXPECT_NEAR(monodromy_radius_at(model, r0_direct(model), 1.0, 128), 1.0, 1e-6);
    const auto p = sample_tick();
    const auto tick_model = validate(tick::linearize(p));
    EXPECT_NEAR(monodromy_radius_at(tick_model, r0_direct(tick_model), p.max_delay(), 128), 1.0, 1e-6);
}

TEST(R0Bisection, ProbesAreMonotone)
{
    const auto model = validate(scalar_model(3.0, 1.5, 0.7));
    auto probes = r0_bisection(model, 1.0, 64).probes;
    std::sort(probes.begin(), probes.end(), [](auto a, auto b) { return a.mu < b.mu; });
    for (std::size_t k = 1; k < probes.size(); ++k) {
        EXPECT_LE(probes[k].radius, probes[k - 1].radius + 1e-12);
    }
}

TEST(R0Bisection, ZeroFIsRejected)
{
    const NextGenModel model(DelayLinearOperator::zero(1), DelayLinearOperator(DenseMatrix{{1.0}}));
    try {
        r0_bisection(validate(model), 1.0, 16);
        FAIL() << "expected ZeroR0";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroR0);
    }
}

TEST(ConsistencyReport, ScalarExamples)
{
    const auto half = consistency_report(validate(scalar_model(1.0, 2.0)));
    EXPECT_DOUBLE_EQ(half.r0_direct, 0.5);
    ASSERT_TRUE(half.lambda_star.has_value());
    EXPECT_LT(*half.lambda_star, 0.0);
    EXPECT_EQ(half.regime, Regime::Below);
    EXPECT_TRUE(half.consistent());

    const auto one = consistency_report(validate(scalar_model(1.0, 1.0)));
    EXPECT_DOUBLE_EQ(one.r0_direct, 1.0);
    EXPECT_NEAR(*one.lambda_star, 0.0, 1e-10);
    EXPECT_EQ(one.regime, Regime::Critical);
    EXPECT_TRUE(one.consistent());
    ASSERT_TRUE(one.r0_bisection.has_value());
    EXPECT_NEAR(*one.r0_bisection, 1.0, 1e-3);
}

TEST(ConsistencyReport, TickDefaults)
{
    const auto p = sample_tick();
    const auto rep = consistency_report(validate(tick::linearize(p)));
    EXPECT_TRUE(rep.consistent());
    EXPECT_EQ(rep.t0, p.max_delay());
    EXPECT_EQ(rep.n, 128u);
    EXPECT_TRUE(rep.sign_consistent.value_or(false));
    EXPECT_TRUE(rep.bisection_consistent.value_or(false));
}

TEST(ConsistencyReport, DirectOnlySkipsBisection)
{
    R0Options opts;
    opts.method = Method::Direct;
    const auto rep = consistency_report(validate(scalar_model(2.0, 1.0)), opts);
    EXPECT_FALSE(rep.r0_bisection.has_value());
    EXPECT_EQ(rep.regime, Regime::Above);
}

TEST(ConsistencyReport, IndependentOfGrid)
{
    const auto model = validate(scalar_model(2.0, 1.0));
    R0Options a;
    a.method = Method::Direct;
    a.n = 16;
    a.t0 = 3.0;
    R0Options b = a;
    b.n = 512;
    b.t0 = 0.5;
    EXPECT_EQ(consistency_report(model, a).r0_direct, consistency_report(model, b).r0_direct);
}
