#include "r0fde/delay_op.hpp"
#include "r0fde/random_models.hpp"
#include "r0fde/tick_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace r0fde;

namespace {

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

HistorySegment random_segment(random::Rng& rng, std::size_t m, double tau, std::size_t n,
                              double lo, double hi)
{
    HistorySegment out(m, tau, n);
    for (auto& v : out.values()) {
        v = random::uniform(rng, lo, hi);
    }
    return out;
}

} // namespace

TEST(Evaluate, NegativeIdentityOnConstant)
{
    const DelayLinearOperator op(-1.0 * DenseMatrix::identity(2));
    const auto y = op.evaluate(HistorySegment::constant(Vector{1, 1}, 1.0, 16));
    EXPECT_EQ(y, (Vector{-1, -1}));
}

TEST(Evaluate, ExponentialHistoryAtUnitDelay)
{
    const DelayLinearOperator op(DenseMatrix(1), {{1.0, DenseMatrix{{1.0}}}});
    const auto phi = HistorySegment::from_function(1, 1.0, 64, [](double t) { return Vector{std::exp(t)}; });
    EXPECT_NEAR(op.evaluate(phi)[0], 0.367879441171442321595523770161, 1e-14);
}

TEST(Evaluate, OffGridDelayUsesCubicInterpolation)
{
    // Cubics are reproduced exactly by the 4-point stencil.
    const DelayLinearOperator op(DenseMatrix(1), {{0.73, DenseMatrix{{1.0}}}});
    auto cubic = [](double t) { return 2.0 + t - 3.0 * t * t + 0.5 * t * t * t; };
    const auto phi = HistorySegment::from_function(1, 1.0, 10, [&](double t) { return Vector{cubic(t)}; });
    EXPECT_NEAR(op.evaluate(phi)[0], cubic(-0.73), 1e-13);
}

TEST(Evaluate, ScalingInput)
{
    random::Rng rng(1);
    const auto op = random::cooperative_operator(rng, 4, 3);
    const double tau = std::max(op.max_delay(), 0.5);
    const auto phi = random_segment(rng, op.dim(), tau, 40, -1.0, 1.0);
    const auto y1 = op.evaluate(phi);
    const auto y2 = op.evaluate(2.0 * phi);
    for (std::size_t i = 0; i < y1.size(); ++i) {
        EXPECT_NEAR(y2[i], 2.0 * y1[i], 1e-14 * std::max(1.0, std::abs(y1[i])));
    }
}

TEST(Evaluate, Linearity)
{
    random::Rng rng(2);
    for (int k = 0; k < 50; ++k) {
        const auto op = random::cooperative_operator(rng);
        const double tau = std::max(op.max_delay(), 0.5);
        const auto phi = random_segment(rng, op.dim(), tau, 32, -1.0, 1.0);
        const auto psi = random_segment(rng, op.dim(), tau, 32, -1.0, 1.0);
        const double a = random::uniform(rng, -2.0, 2.0);
        const double b = random::uniform(rng, -2.0, 2.0);
        const auto lhs = op.evaluate(a * phi + b * psi);
        const auto ep = op.evaluate(phi);
        const auto es = op.evaluate(psi);
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            EXPECT_NEAR(lhs[i], a * ep[i] + b * es[i], 1e-12);
        }
    }
}

TEST(Evaluate, ShortHistoryIsRejected)
{
    const DelayLinearOperator op(DenseMatrix(1), {{2.0, DenseMatrix{{1.0}}}});
    try {
        op.evaluate(HistorySegment::constant(Vector{1.0}, 1.0, 8));
        FAIL() << "expected DelayExceedsHistory";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DelayExceedsHistory);
    }
}

TEST(Hat, CollapsesDelays)
{
    const DelayLinearOperator op(DenseMatrix{{-1.0}}, {{1.0, DenseMatrix{{2.0}}}});
    EXPECT_EQ(op.hat(), (DenseMatrix{{1.0}}));
    const DenseMatrix a0{{1, 2}, {3, 4}};
    EXPECT_EQ(DelayLinearOperator(a0).hat(), a0);
}

TEST(Hat, TickRecruitmentHasSingleEntry)
{
    const auto p = sample_tick();
    const auto fhat = tick::linearize(p).F().hat();
    const double expected = p.b * p.r[3] * std::exp(-p.d[3] * p.tau1);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(fhat(i, j), (i == 0 && j == 3) ? expected : 0.0);
        }
    }
}

TEST(Hat, MatchesEvaluateOnConstantHistories)
{
    random::Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const auto op = random::cooperative_operator(rng);
        Vector x(op.dim());
        for (auto& v : x) {
            v = random::uniform(rng, -1.0, 1.0);
        }
        const auto y = op.evaluate(HistorySegment::constant(x, std::max(op.max_delay(), 0.1), 17));
        const auto z = op.hat() * x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_NEAR(y[i], z[i], 1e-14 * (1.0 + std::abs(z[i])));
        }
    }
}

TEST(CheckCooperative, Examples)
{
    EXPECT_TRUE(DelayLinearOperator(-1.0 * DenseMatrix::identity(2), {{1.0, DenseMatrix{{0, 1}, {1, 0}}}})
                    .check_cooperative());
    EXPECT_FALSE(DelayLinearOperator(DenseMatrix{{-1, -0.5}, {0, -1}}).check_cooperative());
    EXPECT_TRUE(tick::linearize(sample_tick()).V().negate().check_cooperative());
}

TEST(CheckCooperative, NegativeDelayedEntryFails)
{
    EXPECT_FALSE(DelayLinearOperator(DenseMatrix{{-1.0}}, {{0.5, DenseMatrix{{-0.1}}}}).check_cooperative());
}

TEST(CheckCooperative, ImpliesQuasimonotoneEvaluation)
{
    random::Rng rng(4);
    for (int k = 0; k < 200; ++k) {
        const auto op = random::cooperative_operator(rng);
        ASSERT_TRUE(op.check_cooperative());
        const double tau = std::max(op.max_delay(), 0.5);
        auto phi = random_segment(rng, op.dim(), tau, 24, 0.0, 1.0);
        const std::size_t i = random::uniform_index(rng, 0, op.dim() - 1);
        phi.sample(phi.grid_intervals())[i] = 0.0;
        // Off-grid lookups of a nonnegative grid function through a cubic can
        // undershoot; keep the check on grid-aligned delays.
        std::vector<DelayTerm> aligned;
        for (const auto& t : op.terms()) {
            const double snapped = std::max(1.0, std::round(t.tau / phi.spacing())) * phi.spacing();
            aligned.push_back({std::min(snapped, tau), t.matrix});
        }
        const DelayLinearOperator grid_op(op.instantaneous(), aligned);
        EXPECT_GE(grid_op.evaluate(phi)[i], 0.0);
    }
}

TEST(CheckPositive, Examples)
{
    EXPECT_TRUE(tick::linearize(sample_tick()).F().check_positive());
    EXPECT_FALSE(DelayLinearOperator(-1.0 * DenseMatrix::identity(2)).check_positive());
    EXPECT_TRUE(DelayLinearOperator::zero(3).check_positive());
}

TEST(Scale, Examples)
{
    const auto f = tick::linearize(sample_tick()).F();
    EXPECT_EQ(f.scale(1.0), f);
    EXPECT_EQ(f.scale(3.5).hat(), 3.5 * f.hat());
    EXPECT_EQ(f.scale(2.0).scale(0.5), f);
    EXPECT_THROW(f.scale(0.0), Error);
    EXPECT_THROW(f.scale(-1.0), Error);
}

TEST(Construction, MergesDuplicateDelaysAndSorts)
{
    const DelayLinearOperator op(DenseMatrix{{0.0}}, {{2.0, DenseMatrix{{1.0}}},
                                                     {0.5, DenseMatrix{{0.25}}},
                                                     {2.0, DenseMatrix{{3.0}}}});
    ASSERT_EQ(op.terms().size(), 2u);
    EXPECT_EQ(op.terms()[0].tau, 0.5);
    EXPECT_EQ(op.terms()[1].tau, 2.0);
    EXPECT_EQ(op.terms()[1].matrix, (DenseMatrix{{4.0}}));
    EXPECT_EQ(op.max_delay(), 2.0);
    EXPECT_EQ(op.min_delay(), 0.5);
}

TEST(Construction, RejectsBadDelays)
{
    EXPECT_THROW(DelayLinearOperator(DenseMatrix{{0.0}}, {{0.0, DenseMatrix{{1.0}}}}), Error);
    EXPECT_THROW(DelayLinearOperator(DenseMatrix{{0.0}}, {{-1.0, DenseMatrix{{1.0}}}}), Error);
    EXPECT_THROW(DelayLinearOperator(DenseMatrix{{0.0}}, {{1.0, DenseMatrix::identity(2)}}), Error);
}

TEST(HistorySegment, GridAndPredicates)
{
    HistorySegment phi(2, 2.0, 4);
    EXPECT_EQ(phi.sample_count(), 5u);
    EXPECT_DOUBLE_EQ(phi.spacing(), 0.5);
    EXPECT_DOUBLE_EQ(phi.theta(0), -2.0);
    EXPECT_DOUBLE_EQ(phi.theta(4), 0.0);
    EXPECT_TRUE(phi.is_nonnegative());
    phi.sample(1)[0] = -1e-300;
    EXPECT_FALSE(phi.is_nonnegative());
    EXPECT_THROW(HistorySegment(1, 1.0, 0), Error);
    EXPECT_THROW(phi.at(0.5), Error);
    EXPECT_THROW(phi.at(-2.5), Error);
}

TEST(HistorySegment, ZeroLengthHasSingleSample)
{
    const auto phi = HistorySegment::constant(Vector{3.0}, 0.0, 10);
    EXPECT_EQ(phi.sample_count(), 1u);
    EXPECT_EQ(phi.at(0.0)[0], 3.0);
}
