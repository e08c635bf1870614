#include "aapi/envs.hpp"
#include "aapi/errors.hpp"
#include "aapi/mdp_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace aapi;

// --- tabular -----------------------------------------------------------------

TEST(Tabular, RewardOnlyInFirstState) {
    Rng rng(0);
    for (std::size_t a = 0; a < 3; ++a) {
        EXPECT_DOUBLE_EQ(tabular_step(5, 3, 0, a, rng).reward, 1.0);
        EXPECT_DOUBLE_EQ(tabular_step(5, 3, 2, a, rng).reward, 0.0);
    }
}

TEST(Tabular, DesignatedActionMovesDown) {
    Rng rng(17);
    const int n = 200000;
    int down = 0;
    for (int i = 0; i < n; ++i) down += tabular_step(5, 2, 2, kTabularDesignatedAction, rng).next == 1 ? 1 : 0;
    // 0.9 directed plus the uniform fallback landing on the same state
    const double p = kTabularMoveProb + (1 - kTabularMoveProb) / 5.0;
    EXPECT_NEAR(double(down) / n, p, 3 * std::sqrt(p * (1 - p) / n));
    const auto mdp = tabular_ergodic_mdp(5, 2);
    EXPECT_NEAR(mdp.p(2, kTabularDesignatedAction, 1), p, 1e-15);
}

TEST(Tabular, KernelMatchesSampler) {
    const auto mdp = tabular_ergodic_mdp(4, 3);
    Rng rng(5);
    const int n = 40000;
    for (std::size_t x = 0; x < 4; ++x)
        for (std::size_t a = 0; a < 3; ++a) {
            std::vector<int> hits(4, 0);
            for (int i = 0; i < n; ++i) ++hits[tabular_step(4, 3, x, a, rng).next];
            for (std::size_t y = 0; y < 4; ++y) {
                const double p = mdp.p(x, a, y);
                EXPECT_NEAR(double(hits[y]) / n, p, 4 * std::sqrt(p * (1 - p) / n) + 1e-12);
            }
        }
}

TEST(Tabular, InvalidIndicesThrow) {
    Rng rng(0);
    EXPECT_THROW(tabular_step(5, 2, 5, 0, rng), InvalidArgument);
    EXPECT_THROW(tabular_step(5, 2, 0, 2, rng), InvalidArgument);
}

TEST(Tabular, DobrushinBelowOneForSmallSizes) {
    for (std::size_t n = 2; n <= 8; ++n) {
        const auto info = mixing_time_bound(tabular_ergodic_mdp(n, 2));
        EXPECT_LT(info.beta, 1.0) << n;
    }
}

// --- DeepSea -----------------------------------------------------------------

TEST(DeepSea, Examples) {
    const auto s1 = deepsea_step(4, {0, 0}, 1);
    EXPECT_EQ(s1.next, (GridCell{1, 1}));
    EXPECT_DOUBLE_EQ(s1.reward, -1.0);
    const auto s2 = deepsea_step(4, {3, 3}, 0);
    EXPECT_EQ(s2.next, (GridCell{0, 2}));
    EXPECT_DOUBLE_EQ(s2.reward, 8.0);
    const auto s3 = deepsea_step(4, {1, 0}, 0);
    EXPECT_EQ(s3.next, (GridCell{2, 0}));
    EXPECT_DOUBLE_EQ(s3.reward, 0.0);
    EXPECT_EQ(deepsea_step(4, {3, 3}, 1).next, (GridCell{0, 3}));
}

TEST(DeepSea, OutOfGridThrows) {
    EXPECT_THROW(deepsea_step(4, {4, 0}, 0), InvalidArgument);
    EXPECT_THROW(deepsea_step(4, {0, -1}, 0), InvalidArgument);
    EXPECT_THROW(deepsea_step(4, {0, 0}, 2), InvalidArgument);
}

namespace {

template <typename Choose>
double deepsea_average(int n, long steps, Choose choose) {
    GridCell c{0, 0};
    double total = 0.0;
    for (long t = 0; t < steps; ++t) {
        const auto s = deepsea_step(n, c, choose(c));
        total += s.reward;
        c = s.next;
    }
    return total / double(steps);
}

}  // namespace

TEST(DeepSea, FixedPolicyAverages) {
    for (int n : {4, 5, 8}) {
        // always right: goal once every n steps, n-1 paid moves in between
        EXPECT_NEAR(deepsea_average(n, 100000, [](GridCell) { return std::size_t{1}; }), double(n + 1) / n, 1e-3);
        EXPECT_NEAR(deepsea_average(n, 100000, [](GridCell) { return std::size_t{0}; }), 0.0, 1e-12);
    }
}

TEST(DeepSea, AlternatingStrategyRevisitsGoal) {
    const int n = 5;
    const double avg = deepsea_average(n, 100000, [n](GridCell c) { return deepsea_alternating_action(n, c); });
    // period n: one goal visit (2n) and two paid moves
    EXPECT_GT(avg, double(n + 1) / n);
    EXPECT_NEAR(avg, 1.6, 1e-3);
}

// --- CartPole ----------------------------------------------------------------

TEST(CartPole, OneEulerStepFromRest) {
    const auto next = cartpole_dynamics({0, 0, 0, 0}, 1);
    const double total = 1.1;
    const double temp = 10.0 / total;
    const double theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / total));
    const double x_acc = temp - 0.1 * 0.5 * theta_acc / total;
    EXPECT_NEAR(next[1], 0.02 * x_acc, 1e-12);
    EXPECT_NEAR(next[1], 0.195122, 1e-6);
    EXPECT_DOUBLE_EQ(next[0], 0.0);
    EXPECT_NEAR(next[3], 0.02 * theta_acc, 1e-12);
}

TEST(CartPole, SurvivingEpisodeEndsWithZero) {
    Rng rng(0);
    CartPoleState s;
    s.h = 199;
    const auto out = cartpole_step(s, 0, rng);
    EXPECT_TRUE(out.reset);
    EXPECT_DOUBLE_EQ(out.reward, 0.0);
    EXPECT_EQ(out.next.h, 0);
}

TEST(CartPole, FailureAtFiftyCostsOneFifty) {
    Rng rng(0);
    CartPoleState s;
    s.h = 49;
    s.obs = {0, 0, 0.5, 0};
    const auto out = cartpole_step(s, 0, rng);
    EXPECT_TRUE(out.reset);
    EXPECT_DOUBLE_EQ(out.reward, -150.0);
}

TEST(CartPole, UprightStepPaysOne) {
    Rng rng(0);
    const auto out = cartpole_step(CartPoleState{}, 1, rng);
    EXPECT_FALSE(out.reset);
    EXPECT_DOUBLE_EQ(out.reward, 1.0);
    EXPECT_EQ(out.next.h, 1);
}

TEST(CartPole, InitialStateInRange) {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto s = cartpole_initial(rng);
        for (double v : s.obs) EXPECT_LE(std::abs(v), 0.05);
        EXPECT_EQ(s.h, 0);
    }
}

// --- interface ---------------------------------------------------------------

TEST(Environment, FactoryAndStateKinds) {
    Rng rng(0);
    const auto tab = make_env(EnvSpec::tabular(5, 2));
    EXPECT_LT(std::get<std::size_t>(tab->initial_state(rng)), 5u);
    EXPECT_THROW(tab->step(State{GridCell{0, 0}}, 0, rng), InvalidArgument);
    const auto sea = make_env(EnvSpec::deepsea(5));
    EXPECT_EQ(std::get<GridCell>(sea->initial_state(rng)), (GridCell{0, 0}));
    EXPECT_DOUBLE_EQ(sea->spec().reward_max, 10.0);
    EXPECT_EQ(parse_env_kind("cartpole"), EnvKind::cartpole);
    EXPECT_THROW(parse_env_kind("pong"), InvalidArgument);
}
