#include <gtest/gtest.h>

#include <random>

#include "qsim/policies.hpp"
#include "reference_model.hpp"

using namespace qsim;

namespace {

struct Harness {
    t2::Engine engine;
    PolicyContext ctx{&engine, HoltParams{}};
    Synopsis current = Synopsis{{0.0}, 1};
    EpochState state;
    std::int64_t step = 0;

    Harness(int T, double theta) : state(EpochState::begin(T, theta, current)) {}

    // Feeds a quantum directly; the synopsis is moved by the same amount so
    // that last_sent/current stay consistent with the quantum.
    Decision feed(Policy p, double q) {
        current.stats[0] = state.last_sent.stats[0] + q;
        ++current.count;
        return policy_step(p, state, current, UpdateQuantum{q, ++step}, ctx);
    }
};

}  // namespace

TEST(CombinePods, Examples) {
    EXPECT_EQ(combine_pods({0.0}, {0.9}), 0.0);
    EXPECT_EQ(combine_pods({1.0}, {1.0}), 1.0);
    EXPECT_NEAR(combine_pods({0.64}, {0.81}), 0.72, 1e-15);
}

TEST(CombinePods, BoundsAndIdempotence) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng), b = u(rng);
        const double g = combine_pods({a}, {b});
        ASSERT_GE(g, std::min(a, b) - 1e-12);
        ASSERT_LE(g, std::max(a, b) + 1e-12);
        ASSERT_NEAR(combine_pods({a}, {a}), a, 1e-12);
        ASSERT_EQ(combine_pods({0.0}, {a}), 0.0);
    }
}

TEST(EpochStateTest, RejectsBadParameters) {
    EXPECT_THROW(EpochState::begin(0, 0.6, Synopsis{{0.0}, 1}), ConfigError);
    EXPECT_THROW(EpochState::begin(5, 0.0, Synopsis{{0.0}, 1}), ConfigError);
    EXPECT_THROW(EpochState::begin(5, NAN, Synopsis{{0.0}, 1}), ConfigError);
}

TEST(Uddm, HoldsUntilThreeQuanta) {
    Harness h(10, 0.01);
    EXPECT_FALSE(h.feed(Policy::uddm, 5.0).disseminate());
    const Decision d = h.feed(Policy::uddm, 5.0);
    EXPECT_FALSE(d.disseminate());
    EXPECT_FALSE(d.score.has_value());
}

TEST(Uddm, DeadlineWhenScoreNeverExceedsTheta) {
    Harness h(4, 1.01);
    for (int t = 1; t < 4; ++t) EXPECT_FALSE(h.feed(Policy::uddm, 10.0 * t).disseminate());
    const Decision d = h.feed(Policy::uddm, 40.0);
    EXPECT_TRUE(d.disseminate());
    EXPECT_EQ(d.cause, Cause::deadline);
    ASSERT_TRUE(d.score.has_value());
    EXPECT_LE(*d.score, 1.01);
    EXPECT_EQ(h.state.t, 1);
    EXPECT_TRUE(h.state.quanta.empty());
    EXPECT_FALSE(h.state.holt.has_value());
}

TEST(Uddm, SaturatedQuantaTriggerThreshold) {
    // Equal quanta normalize to (1,1,1) and forecast flat, so PoD_p = PoD_f =
    // the high centroid.
    Harness h(10, 0.6);
    h.feed(Policy::uddm, 5.0);
    h.feed(Policy::uddm, 5.0);
    const Decision d = h.feed(Policy::uddm, 5.0);
    EXPECT_TRUE(d.disseminate());
    EXPECT_EQ(d.cause, Cause::threshold);
    ASSERT_TRUE(d.score.has_value());
    EXPECT_NEAR(*d.score, ref::centroid(ref::Terms{}, 2), 1e-12);
    EXPECT_GE(*d.score, 0.75);
}

// All-zero inputs fire only the low rule, so G sits at the low centroid.
TEST(Uddm, ZeroQuantaScoreTheLowCentroid) {
    Harness h(6, 0.3);
    for (int t = 1; t <= 6; ++t) {
        const Decision d = h.feed(Policy::uddm, 0.0);
        if (d.score) { EXPECT_NEAR(*d.score, ref::centroid(ref::Terms{}, 0), 1e-12); }
        EXPECT_EQ(d.disseminate(), t == 6);
        if (d.disseminate()) { EXPECT_EQ(d.cause, Cause::deadline); }
    }
}

TEST(Uddm, ThresholdWinsOverDeadlineOnTheLastStep) {
    Harness h(3, 0.6);
    h.feed(Policy::uddm, 5.0);
    h.feed(Policy::uddm, 5.0);
    EXPECT_EQ(h.feed(Policy::uddm, 5.0).cause, Cause::threshold);
}

TEST(Bm, HoldsOnZeroChange) {
    Harness h(10, 0.6);
    const Decision d = h.feed(Policy::bm, 0.0);
    EXPECT_FALSE(d.disseminate());
}

TEST(Bm, AnyChangeDisseminates) {
    Harness h(10, 0.6);
    const Decision d = h.feed(Policy::bm, 0.001);
    EXPECT_TRUE(d.disseminate());
    EXPECT_EQ(d.cause, Cause::any_change);
}

TEST(Bm, ForcedAtDeadline) {
    Harness h(3, 0.6);
    h.feed(Policy::bm, 0.0);
    h.feed(Policy::bm, 0.0);
    const Decision d = h.feed(Policy::bm, 0.0);
    EXPECT_TRUE(d.disseminate());
    EXPECT_EQ(d.cause, Cause::deadline);
}

TEST(Pm, ZeroForecastsHold) {
    Harness h(10, 0.01);
    h.feed(Policy::pm, 0.0);
    const Decision d = h.feed(Policy::pm, 0.0);
    EXPECT_FALSE(d.disseminate());
    ASSERT_TRUE(d.score.has_value());
    EXPECT_EQ(*d.score, 0.0);
}

TEST(Pm, SaturatedForecastsDisseminate) {
    Harness h(10, 0.75);
    EXPECT_FALSE(h.feed(Policy::pm, 1.0).disseminate());  // Holt not ready yet
    const Decision d = h.feed(Policy::pm, 1.0);
    EXPECT_TRUE(d.disseminate());
    EXPECT_EQ(d.cause, Cause::prediction);
    EXPECT_EQ(*d.score, 1.0);
}

TEST(Pm, MeanEqualToThetaHolds) {
    // Window max 20; quanta 12, 13 give level 13, trend 1 and forecasts
    // 14, 15, 16 -> (0.7, 0.75, 0.8), mean 0.75.
    Harness h(10, 0.75);
    h.state.normalizer.observe(20.0);
    h.feed(Policy::pm, 12.0);
    const Decision d = h.feed(Policy::pm, 13.0);
    ASSERT_TRUE(d.score.has_value());
    EXPECT_DOUBLE_EQ(*d.score, 0.75);
    EXPECT_FALSE(d.disseminate());
}

TEST(Policies, EpochResetZeroesTheNextQuantum) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    for (Policy p : {Policy::uddm, Policy::bm, Policy::pm}) {
        const t2::Engine engine;
        const PolicyContext ctx{&engine, HoltParams{}};
        Synopsis cur = Synopsis::empty(2);
        cur.absorb({{0.0, 0.0}, 0});
        EpochState s = EpochState::begin(7, 0.6, cur);
        for (std::int64_t step = 1; step <= 200; ++step) {
            cur.absorb({{g(rng) + 0.1 * step, g(rng)}, step});
            const Decision d = policy_step(p, s, cur, update_quantum(s.last_sent, cur, step), ctx);
            if (d.disseminate()) { ASSERT_EQ(update_quantum(s.last_sent, cur).value, 0.0); }
        }
    }
}

TEST(Policies, DeadlineLiveness) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution flat(0.3);
    for (Policy p : {Policy::uddm, Policy::bm, Policy::pm})
        for (int T : {1, 2, 5, 17})
            for (double theta : {0.3, 0.6, 0.9, 1.01}) {
                const t2::Engine engine;
                const PolicyContext ctx{&engine, HoltParams{}};
                Synopsis cur = Synopsis::empty(1);
                cur.absorb({{0.0}, 0});
                EpochState s = EpochState::begin(T, theta, cur);
                int since = 0;
                for (std::int64_t step = 1; step <= 300; ++step) {
                    if (!flat(rng)) cur.absorb({{g(rng) * step}, step});
                    const Decision d = policy_step(p, s, cur, update_quantum(s.last_sent, cur, step), ctx);
                    ++since;
                    ASSERT_LE(since, T);
                    if (d.disseminate()) since = 0;
                }
            }
}

TEST(Uddm, RaisingThetaNeverAdvancesTheTrigger) {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g(0.0, 1.0);
    const t2::Engine engine;
    const PolicyContext ctx{&engine, HoltParams{}};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs(60);
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = g(rng) + 0.3 * static_cast<double>(i);
        int previous = 0;
        for (double theta : {0.2, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 1.01}) {
            Synopsis cur = Synopsis::empty(1);
            cur.absorb({{0.0}, 0});
            EpochState s = EpochState::begin(50, theta, cur);
            int t_star = 0;
            for (std::int64_t step = 1; step <= 50 && t_star == 0; ++step) {
                cur.absorb({{xs[static_cast<std::size_t>(step)]}, step});
                const int t = s.t;
                if (policy_step(Policy::uddm, s, cur, update_quantum(s.last_sent, cur, step), ctx)
                        .disseminate())
                    t_star = t;
            }
            ASSERT_GE(t_star, previous) << "theta " << theta;
            previous = t_star;
        }
    }
}

TEST(PolicyNames, ParseAndPrint) {
    EXPECT_EQ(parse_policy("UDDM"), Policy::uddm);
    EXPECT_EQ(parse_policy("bm"), Policy::bm);
    EXPECT_EQ(parse_policy("Pm"), Policy::pm);
    EXPECT_THROW(parse_policy("xyz"), ConfigError);
    EXPECT_EQ(to_string(Cause::any_change), "any-change");
}
