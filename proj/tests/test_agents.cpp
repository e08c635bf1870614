#include "aapi/agents.hpp"
#include "aapi/ao_ftrl.hpp"
#include "aapi/errors.hpp"
#include "aapi/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace aapi;

namespace {

AgentConfig small(Variant v, std::size_t phases = 10) {
    AgentConfig cfg;
    cfg.variant = v;
    cfg.tau = 100;
    cfg.phases = phases;
    cfg.eta = 0.2;
    return cfg;
}

QEstimate random_estimate(const FeatureMap& map, Rng& rng, double scale = 1.0) {
    Vector w(static_cast<Eigen::Index>(map.dim()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-scale, scale);
    return QEstimate(map, w, 0.0, ClipRange{});
}

}  // namespace

// =============================================================================
// Boltzmann agents
// =============================================================================

TEST(Boltzmann, FirstPhaseIsUniform) {
    for (Variant v : {Variant::aapi, Variant::kaapi, Variant::politex}) {
        BoltzmannAgent agent(small(v), FeatureMap::tabular(4, 3));
        const Vector p = agent.distribution(State{std::size_t{2}});
        for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(p(a), 1.0 / 3.0);
    }
}

TEST(Boltzmann, SingleZeroEstimateStaysUniform) {
    Rng rng(0);
    for (Variant v : {Variant::aapi, Variant::kaapi, Variant::politex}) {
        const auto map = FeatureMap::deepsea(3);
        BoltzmannAgent agent(small(v, 1), map);
        agent.improve(QEstimate(map, Vector::Zero(static_cast<Eigen::Index>(map.dim())), 0.0, ClipRange{}), rng);
        const Vector p = agent.distribution(State{GridCell{1, 2}});
        EXPECT_DOUBLE_EQ(p(0), 0.5);
        EXPECT_DOUBLE_EQ(p(1), 0.5);
        EXPECT_THROW(agent.improve(random_estimate(map, rng), rng), PhaseOverflow);
    }
}

TEST(Boltzmann, AapiMatchesLearnerChainOnTabular) {
    const auto map = FeatureMap::tabular(3, 2);
    auto cfg = small(Variant::aapi, 20);
    BoltzmannAgent agent(cfg, map);
    Rng rng(4);
    std::vector<ftrl::LearnerState> learners(3, ftrl::LearnerState::initial(2));
    for (int k = 0; k < 20; ++k) {
        auto est = random_estimate(map, rng, 3.0);
        std::vector<Vector> q(3);
        for (std::size_t x = 0; x < 3; ++x) q[x] = est.action_values(map.state_block(State{x}));
        agent.improve(std::move(est), rng);
        for (std::size_t x = 0; x < 3; ++x) {
            const auto r = ftrl::step(learners[x], q[x], q[x], cfg.eta, cfg.eta_floor);
            learners[x] = r.state;
            std::vector<double> p(2);
            const double rate = agent.distribution(State{x}, p);
            EXPECT_NEAR(rate, r.rate, 1e-10);
            EXPECT_NEAR(p[0], r.play[0], 1e-10);
        }
    }
}

TEST(Boltzmann, PolitexAndKaapiRates) {
    const auto map = FeatureMap::tabular(2, 2);
    Rng rng(6);
    auto pcfg = small(Variant::politex, 16);
    auto kcfg = small(Variant::kaapi, 16);
    BoltzmannAgent politex(pcfg, map);
    BoltzmannAgent kaapi(kcfg, map);
    Vector sum = Vector::Zero(2);
    Vector last = Vector::Zero(2);
    for (int k = 1; k <= 5; ++k) {
        auto est = random_estimate(map, rng);
        last = est.action_values(map.state_block(State{std::size_t{1}}));
        sum += last;
        politex.improve(est, rng);
        kaapi.improve(est, rng);
    }
    std::vector<double> p(2);
    const double pr = politex.distribution(State{std::size_t{1}}, p);
    EXPECT_NEAR(pr, 0.2 / 4.0, 1e-15);
    const auto expect = ftrl::stable_softmax(sum / pr);
    EXPECT_NEAR(p[0], expect[0], 1e-12);

    const double kr = kaapi.distribution(State{std::size_t{1}}, p);
    EXPECT_NEAR(kr, 0.2 * std::sqrt(5.0), 1e-15);
    const auto kexpect = ftrl::stable_softmax((sum + last) / kr);
    EXPECT_NEAR(p[0], kexpect[0], 1e-12);
}

TEST(Boltzmann, ActionFrequenciesMatchDistribution) {
    const auto map = FeatureMap::tabular(2, 2);
    Rng rng(8);
    BoltzmannAgent agent(small(Variant::aapi, 3), map);
    for (int k = 0; k < 3; ++k) agent.improve(random_estimate(map, rng, 0.3), rng);
    const State x{std::size_t{0}};
    const double p1 = agent.distribution(x)(1);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += agent.act(x, rng) == 1 ? 1 : 0;
    EXPECT_NEAR(double(ones) / n, p1, 3 * std::sqrt(p1 * (1 - p1) / n));
    EXPECT_GT(agent.last_rate(), 0.0);
}

TEST(Boltzmann, ContinuousStatesUseSubsample) {
    const auto map = FeatureMap::cartpole(1);
    auto cfg = small(Variant::aapi, 50);
    cfg.n_max = 7;
    BoltzmannAgent agent(cfg, map);
    Rng rng(10);
    for (int k = 0; k < 12; ++k) agent.improve(random_estimate(map, rng), rng);
    EXPECT_EQ(agent.rate_sample().size(), 7u);
    const State x{CartPoleState{}};
    const Vector b = map.state_block(x);
    std::vector<double> p(2);
    const double rate = agent.distribution(x, p);
    const double expect = subsampled_rate(b, agent.history(), agent.rate_sample(), cfg.eta, cfg.eta_floor);
    EXPECT_NEAR(rate, expect, 1e-10);
}

TEST(Boltzmann, TabularPolicyMatchesDistribution) {
    const auto map = FeatureMap::deepsea(3);
    Rng rng(12);
    BoltzmannAgent agent(small(Variant::aapi), map);
    for (int k = 0; k < 4; ++k) agent.improve(random_estimate(map, rng), rng);
    const auto pi = agent.tabular_policy();
    ASSERT_EQ(pi.n_states(), 9u);
    for (std::size_t x = 0; x < 9; ++x) {
        const Vector p = agent.distribution(map.state_at(x));
        EXPECT_DOUBLE_EQ(pi(x, 0), p(0));
    }
}

TEST(AgentConfig, Validation) {
    AgentConfig cfg;
    cfg.eta = 2.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.eta = 0.001;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.eta = 0.5;
    cfg.phases = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    EXPECT_EQ(parse_variant("kaapi"), Variant::kaapi);
    EXPECT_THROW(parse_variant("dqn"), InvalidArgument);
}

// =============================================================================
// RLSVI
// =============================================================================

TEST(Posterior, OneObservationRidgeMean) {
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 1.0;
    Vector b = Vector::Zero(2);
    b(0) = 1.0;
    const auto post = linear_posterior(g, b, 1.0, 1.0);
    EXPECT_NEAR(post.mean(0), 0.5, 1e-15);
    EXPECT_NEAR(post.mean(1), 0.0, 1e-15);
    EXPECT_THROW(linear_posterior(g, b, 1.0, -2.0), NumericError);
}

TEST(Posterior, PriorSampleCovariance) {
    const auto post = linear_posterior(Matrix::Zero(2, 2), Vector::Zero(2), 2.0, 4.0);
    Rng rng(3);
    const int n = 50000;
    Matrix cov = Matrix::Zero(2, 2);
    Vector mean = Vector::Zero(2);
    for (int i = 0; i < n; ++i) {
        const Vector s = sample_posterior(post, rng);
        mean += s;
        cov += s * s.transpose();
    }
    mean /= n;
    cov /= n;
    // prior N(0, sigma2 / lambda I) = N(0, 0.5 I)
    EXPECT_NEAR(mean(0), 0.0, 0.02);
    EXPECT_NEAR(cov(0, 0), 0.5, 0.02);
    EXPECT_NEAR(cov(1, 1), 0.5, 0.02);
    EXPECT_NEAR(cov(0, 1), 0.0, 0.02);
    EXPECT_DOUBLE_EQ(sample_posterior(post, rng, false)(0), 0.0);
}

TEST(Rlsvi, GreedyTiesPickLowestAction) {
    AgentConfig cfg;
    cfg.variant = Variant::rlsvi;
    RlsviAgent agent(cfg, FeatureMap::tabular(2, 3), true, 1);
    EXPECT_EQ(agent.act(State{std::size_t{0}}, 0), 0u);
}

TEST(Rlsvi, OneStepEpisodicFindsOptimalAction) {
    // two states, one step; r(x, a) known, posterior mean with tiny prior
    AgentConfig cfg;
    cfg.variant = Variant::rlsvi;
    cfg.rlsvi.prior_lambda = 1e-6;
    cfg.rlsvi.sample = false;
    const auto map = FeatureMap::tabular(2, 2);
    RlsviAgent agent(cfg, map, true, 1);
    const double r[2][2] = {{0.2, 0.7}, {0.9, 0.1}};
    for (int rep = 0; rep < 5; ++rep)
        for (std::size_t x = 0; x < 2; ++x)
            for (std::size_t a = 0; a < 2; ++a) agent.observe({State{x}, a, r[x][a], State{x}}, 0);
    Rng rng(0);
    agent.update(rng);
    EXPECT_EQ(agent.act(State{std::size_t{0}}, 0), 1u);
    EXPECT_EQ(agent.act(State{std::size_t{1}}, 0), 0u);
    EXPECT_NEAR(agent.q_values(State{std::size_t{1}}, 0)(0), 0.9, 1e-6);
}

TEST(Rlsvi, TwoStepBackup) {
    AgentConfig cfg;
    cfg.variant = Variant::rlsvi;
    cfg.rlsvi.prior_lambda = 1e-8;
    cfg.rlsvi.sample = false;
    const auto map = FeatureMap::tabular(2, 2);
    RlsviAgent agent(cfg, map, true, 2);
    // h = 0 at state 0: a = 0 -> state 0 (reward 0), a = 1 -> state 1 (reward 0)
    // h = 1: state 1 pays 1 for action 0; state 0 pays 0.3 for action 1
    agent.observe({State{std::size_t{0}}, 0, 0.0, State{std::size_t{0}}}, 0);
    agent.observe({State{std::size_t{0}}, 1, 0.0, State{std::size_t{1}}}, 0);
    agent.observe({State{std::size_t{1}}, 0, 1.0, State{std::size_t{0}}}, 1);
    agent.observe({State{std::size_t{1}}, 1, 0.0, State{std::size_t{0}}}, 1);
    agent.observe({State{std::size_t{0}}, 0, 0.0, State{std::size_t{0}}}, 1);
    agent.observe({State{std::size_t{0}}, 1, 0.3, State{std::size_t{0}}}, 1);
    Rng rng(0);
    agent.update(rng);
    const Vector q0 = agent.q_values(State{std::size_t{0}}, 0);
    EXPECT_NEAR(q0(0), 0.3, 1e-6);
    EXPECT_NEAR(q0(1), 1.0, 1e-6);
    EXPECT_EQ(agent.act(State{std::size_t{0}}, 0), 1u);
}

TEST(Rlsvi, EpisodicNeedsFiniteStates) {
    AgentConfig cfg;
    cfg.variant = Variant::rlsvi;
    EXPECT_THROW(RlsviAgent(cfg, FeatureMap::cartpole(1), true, 5), InvalidArgument);
    EXPECT_NO_THROW(RlsviAgent(cfg, FeatureMap::cartpole(1), false, 0));
}

// =============================================================================
// run_experiment
// =============================================================================

TEST(RunExperiment, SinglePhaseIsUniformRollout) {
    auto cfg = small(Variant::aapi, 1);
    cfg.tau = 500;
    cfg.record_policies = true;
    TabularErgodicEnv env(5, 2);
    const auto res = run_experiment(cfg, env, 42);
    ASSERT_EQ(res.rewards.size(), 500u);
    ASSERT_EQ(res.policies.size(), 1u);
    EXPECT_LT((res.policies[0].probs().array() - 0.5).abs().maxCoeff(), 1e-15);
    ASSERT_EQ(res.phases.size(), 1u);
}

TEST(RunExperiment, DeterministicAcrossCalls) {
    for (Variant v : {Variant::aapi, Variant::kaapi, Variant::politex, Variant::rlsvi}) {
        auto cfg = small(v, 8);
        DeepSeaEnv env(4);
        const auto a = run_experiment(cfg, env, 7);
        const auto b = run_experiment(cfg, env, 7);
        EXPECT_EQ(a.rewards, b.rewards) << to_string(v);
        const auto c = run_experiment(cfg, env, 8);
        if (v != Variant::rlsvi) EXPECT_NE(a.rewards, c.rewards) << to_string(v);
    }
}

TEST(RunExperiment, PhaseMetadata) {
    auto cfg = small(Variant::aapi, 6);
    TabularErgodicEnv env(5, 2);
    const auto res = run_experiment(cfg, env, 1);
    ASSERT_EQ(res.phases.size(), 6u);
    for (const auto& p : res.phases) {
        EXPECT_GE(p.gain_estimate, 0.0);
        EXPECT_LE(p.gain_estimate, 1.0);
        EXPECT_LE(p.eta_min, p.eta_max);
        EXPECT_GE(p.policy_change, 0.0);
    }
}

TEST(RunExperiment, ExactQTracksPolicyIteration) {
    auto cfg = small(Variant::aapi, 60);
    cfg.exact_q = true;
    cfg.eta = 0.1;
    cfg.record_policies = true;
    TabularErgodicEnv env(5, 2);
    const auto res = run_experiment(cfg, env, 3);
    const auto mdp = tabular_ergodic_mdp(5, 2);
    const double star = policy_iteration(mdp).gain;
    EXPECT_GT(average_reward(mdp, res.policies.back()), star - 0.02);
}
