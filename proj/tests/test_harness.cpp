#include "aapi/errors.hpp"
#include "aapi/harness.hpp"
#include "aapi/json_io.hpp"
#include "aapi/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

using namespace aapi;

// =============================================================================
// aggregation
// =============================================================================

TEST(Aggregate, SingleTrace) {
    const auto a = aggregate({{1.0, 2.0, 3.0}});
    EXPECT_EQ(a.mean, (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_EQ(a.std, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Aggregate, TwoTraces) {
    const auto a = aggregate({{0.0, 0.0}, {2.0, 2.0}});
    EXPECT_DOUBLE_EQ(a.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(a.std[0], 1.0);
}

TEST(Aggregate, IdenticalTracesHaveZeroStd) {
    const std::vector<double> t = {0.3, -1.7, 2.2};
    const auto a = aggregate({t, t, t, t});
    for (double s : a.std) EXPECT_DOUBLE_EQ(s, 0.0);
}

TEST(Aggregate, TwoPassReference) {
    Rng rng(1);
    std::vector<std::vector<double>> traces(50, std::vector<double>(20));
    for (auto& t : traces)
        for (auto& v : t) v = rng.uniform(-5, 5);
    const auto a = aggregate(traces);
    for (std::size_t i = 0; i < 20; ++i) {
        long double m = 0;
        for (const auto& t : traces) m += t[i];
        m /= 50;
        long double v = 0;
        for (const auto& t : traces) v += (t[i] - m) * (t[i] - m);
        EXPECT_NEAR(a.mean[i], double(m), 1e-12);
        EXPECT_NEAR(a.std[i], std::sqrt(double(v / 50)), 1e-12);
    }
}

TEST(Aggregate, RaggedThrows) {
    EXPECT_THROW(aggregate({{1.0, 2.0}, {1.0}}), InvalidArgument);
    EXPECT_THROW(aggregate({}), InvalidArgument);
}

// =============================================================================
// traces and logging
// =============================================================================

TEST(LoggedSteps, DefaultStrideAndTail) {
    const auto s = logged_steps(200000, 0);
    EXPECT_EQ(s.size(), 2000u);
    EXPECT_EQ(s.front(), 100u);
    EXPECT_EQ(s.back(), 200000u);
    EXPECT_EQ(logged_steps(10, 3), (std::vector<std::size_t>{3, 6, 9, 10}));
    EXPECT_EQ(logged_steps(5, 0), (std::vector<std::size_t>{1, 2, 3, 4, 5}));
}

TEST(ReduceTrace, ConstantRewardCost) {
    const std::vector<double> r(1000, 1.0);
    const auto steps = logged_steps(1000, 7);
    std::vector<double> cost, regret;
    reduce_trace(r, steps, 1.0, cost, &regret);
    for (double c : cost) EXPECT_DOUBLE_EQ(c, -1.0);
    for (double g : regret) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(ReduceTrace, StrideIntroducesNoError) {
    Rng rng(2);
    std::vector<double> r(5000);
    for (auto& v : r) v = rng.uniform();
    std::vector<double> fine, coarse;
    reduce_trace(r, logged_steps(5000, 1), 0.0, fine, nullptr);
    reduce_trace(r, logged_steps(5000, 250), 0.0, coarse, nullptr);
    for (std::size_t i = 0; i < coarse.size(); ++i) EXPECT_DOUBLE_EQ(coarse[i], fine[(i + 1) * 250 - 1]);
}

// =============================================================================
// run_suite and CSV
// =============================================================================

namespace {

ExperimentConfig tiny(EnvSpec env, Variant v) {
    ExperimentConfig cfg;
    cfg.env = env;
    cfg.agent.variant = v;
    cfg.agent.tau = 200;
    cfg.agent.phases = 5;
    cfg.agent.eta = 0.1;
    cfg.runs = 3;
    cfg.base_seed = 10;
    return cfg;
}

}  // namespace

TEST(RunSuite, SerialAndParallelAreByteIdentical) {
    for (const auto& env : {EnvSpec::tabular(5, 2), EnvSpec::deepsea(4)}) {
        for (Variant v : {Variant::aapi, Variant::politex, Variant::rlsvi}) {
            const auto cfg = tiny(env, v);
            const auto a = to_csv(run_suite(cfg, Execution::serial));
            const auto b = to_csv(run_suite(cfg, Execution::parallel));
            EXPECT_EQ(a, b);
            EXPECT_EQ(a, to_csv(run_suite(cfg, Execution::parallel)));
        }
    }
}

TEST(RunSuite, SingleRunHasZeroStd) {
    auto cfg = tiny(EnvSpec::tabular(5, 2), Variant::aapi);
    cfg.runs = 1;
    const auto res = run_suite(cfg);
    for (double s : res.cost.std) EXPECT_DOUBLE_EQ(s, 0.0);
    EXPECT_EQ(res.final_cost.size(), 1u);
    EXPECT_DOUBLE_EQ(res.final_cost[0], res.cost.mean.back());
}

TEST(RunSuite, CsvSchema) {
    const auto tab = to_csv(run_suite(tiny(EnvSpec::tabular(5, 2), Variant::aapi)));
    EXPECT_EQ(tab.rfind("step,cost_mean,cost_std,regret_mean,regret_std\n", 0), 0u);
    EXPECT_EQ(tab.find('\r'), std::string::npos);
    EXPECT_EQ(tab.back(), '\n');
    const auto sea = to_csv(run_suite(tiny(EnvSpec::deepsea(4), Variant::aapi)));
    const auto second = sea.substr(sea.find('\n') + 1);
    EXPECT_EQ(second.rfind("1,", 0), 0u);
    EXPECT_NE(second.find(",,\n"), std::string::npos);
}

TEST(RunSuite, RegretUsesOptimalGain) {
    const auto res = run_suite(tiny(EnvSpec::tabular(5, 2), Variant::aapi));
    ASSERT_TRUE(res.has_regret);
    EXPECT_NEAR(res.gain_star, policy_iteration(tabular_ergodic_mdp(5, 2)).gain, 1e-15);
    const std::size_t last = res.steps.size() - 1;
    const double t = double(res.steps[last]);
    EXPECT_NEAR(res.regret.mean[last], t * res.gain_star + t * res.cost.mean[last], 1e-6);
}

TEST(RunSuite, InvalidConfigThrows) {
    auto cfg = tiny(EnvSpec::tabular(5, 2), Variant::aapi);
    cfg.runs = 0;
    EXPECT_THROW(run_suite(cfg), InvalidArgument);
    cfg.runs = 1;
    cfg.agent.eta = 5;
    EXPECT_THROW(run_suite(cfg), InvalidArgument);
}

TEST(ThreadBudget, EnvironmentCap) {
    ::setenv("AAPI_THREADS", "1", 1);
    EXPECT_EQ(thread_budget(8), 1);
    ::unsetenv("AAPI_THREADS");
    EXPECT_EQ(thread_budget(3), 3);
}

// =============================================================================
// JSON
// =============================================================================

TEST(Json, MdpRoundTrip) {
    Rng rng(4);
    const auto mdp = random_mdp(3, 2, rng);
    const auto back = mdp_from_json(mdp_to_json(mdp));
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t a = 0; a < 2; ++a) {
            EXPECT_DOUBLE_EQ(back.r(x, a), mdp.r(x, a));
            for (std::size_t y = 0; y < 3; ++y) EXPECT_DOUBLE_EQ(back.p(x, a, y), mdp.p(x, a, y));
        }
}

TEST(Json, PolicyForms) {
    const auto a = policy_from_json(R"({"probs": [[0.5, 0.5], [1, 0]]})");
    const auto b = policy_from_json(R"([[0.5, 0.5], [1, 0]])");
    EXPECT_EQ(a.probs(), b.probs());
    EXPECT_THROW(policy_from_json("[[0.5, 0.5], [1]]"), InvalidArgument);
    EXPECT_THROW(policy_from_json("{"), InvalidArgument);
}

TEST(Json, ConfigOverlay) {
    ExperimentConfig cfg;
    apply_config_json(R"({"env": "deepsea", "env_size": 6, "agent": "kaapi", "tau": 300,
                          "rlsvi": {"mode": "continuing", "window": 50}, "eval": {"use_all_phases": true}})",
                      cfg);
    EXPECT_EQ(cfg.env.kind, EnvKind::deepsea);
    EXPECT_EQ(cfg.env.size, 6u);
    EXPECT_EQ(cfg.agent.variant, Variant::kaapi);
    EXPECT_EQ(cfg.agent.tau, 300u);
    EXPECT_EQ(cfg.agent.rlsvi.mode, RlsviMode::continuing);
    EXPECT_EQ(cfg.agent.rlsvi.window, 50u);
    EXPECT_TRUE(cfg.agent.use_all_phases);
    EXPECT_THROW(apply_config_json(R"({"colour": 1})", cfg), InvalidArgument);
    EXPECT_THROW(apply_config_json(R"({"tau": "long"})", cfg), InvalidArgument);
}

TEST(Json, QTableShape) {
    TabularMdp mdp(1, 2, std::vector<double>{1, 1}, std::vector<double>{0.0, 1.0});
    const auto s = qtable_to_json(solve_q(mdp, Policy::uniform(1, 2)));
    EXPECT_EQ(s, R"({"gain":0.5,"v":[0.0],"q":[[-0.5,0.5]]})");
}
