#include "aapi/agents.hpp"

#include "aapi/ao_ftrl.hpp"
#include "aapi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aapi {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::aapi: return "aapi";
        case Variant::kaapi: return "kaapi";
        case Variant::politex: return "politex";
        case Variant::rlsvi: return "rlsvi";
    }
    return "unknown";
}

Variant parse_variant(const std::string& name) {
    if (name == "aapi") return Variant::aapi;
    if (name == "kaapi") return Variant::kaapi;
    if (name == "politex") return Variant::politex;
    if (name == "rlsvi") return Variant::rlsvi;
    throw InvalidArgument("unknown agent '" + name + "'");
}

void AgentConfig::validate() const {
    if (!(eta >= 0.01 && eta <= 1.0)) throw InvalidArgument("eta must lie in [0.01, 1]");
    if (!(eta_floor > 0.0)) throw InvalidArgument("eta_floor must be positive");
    if (tau < 2) throw InvalidArgument("tau must be at least 2");
    if (phases < 1) throw InvalidArgument("phases must be at least 1");
    if (n_max < 1) throw InvalidArgument("n_max must be at least 1");
    if (!(t_mix_guess >= 0.0)) throw InvalidArgument("t_mix_guess must be non-negative");
    if (!(rlsvi.sigma2 > 0.0)) throw InvalidArgument("rlsvi sigma2 must be positive");
    if (!(rlsvi.prior_lambda >= 0.0)) throw InvalidArgument("rlsvi prior_lambda must be non-negative");
}

// --- Boltzmann agents ----------------------------------------------------------

BoltzmannAgent::BoltzmannAgent(const AgentConfig& cfg, FeatureMap map)
    : cfg_(cfg), map_(std::move(map)), n_finite_(map_.n_states()) {
    if (cfg_.variant == Variant::rlsvi) throw InvalidArgument("BoltzmannAgent: RLSVI is not a Boltzmann agent");
    cfg_.validate();
    const auto A = map_.n_actions();
    stacked_.resize(static_cast<Eigen::Index>(map_.block_dim()), static_cast<Eigen::Index>(cfg_.phases * A));
    if (n_finite_) {
        cache_.resize(static_cast<Eigen::Index>(*n_finite_), static_cast<Eigen::Index>(A));
        cache_rate_.assign(*n_finite_, 0.0);
        cached_.assign(*n_finite_, 0);
    }
}

double BoltzmannAgent::compute(const Vector& block, std::span<double> out) const {
    const std::size_t k = history_.size();
    const auto A = static_cast<Eigen::Index>(map_.n_actions());
    if (out.size() != static_cast<std::size_t>(A)) throw InvalidArgument("distribution: output has the wrong length");
    if (k == 0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(A));
        return 0.0;
    }
    const auto kA = static_cast<Eigen::Index>(k) * A;
    Vector vals = stacked_.leftCols(kA).transpose() * block;
    for (std::size_t s = 0; s < k; ++s) {
        const auto& c = history_[s].clip();
        auto seg = vals.segment(static_cast<Eigen::Index>(s) * A, A);
        seg = seg.cwiseMax(c.lower).cwiseMin(c.lower + c.width);
    }

    Vector index = Vector::Zero(A);
    for (std::size_t s = 0; s < k; ++s) index += vals.segment(static_cast<Eigen::Index>(s) * A, A);
    if (cfg_.variant != Variant::politex) index += vals.segment(kA - A, A);

    double rate = cfg_.eta_floor;
    switch (cfg_.variant) {
        case Variant::aapi: {
            double sum = 0.0;
            for (std::size_t s : sample_) {
                const auto cur = vals.segment(static_cast<Eigen::Index>(s - 1) * A, A);
                const double gap = s >= 2 ? (cur - vals.segment(static_cast<Eigen::Index>(s - 2) * A, A)).cwiseAbs().maxCoeff()
                                          : cur.cwiseAbs().maxCoeff();
                sum += gap * gap;
            }
            const double correction = static_cast<double>(k) / static_cast<double>(sample_.size());
            rate = std::max(cfg_.eta_floor, cfg_.eta * std::sqrt(2.0 * correction * sum));
            break;
        }
        case Variant::kaapi:
            rate = std::max(cfg_.eta_floor, cfg_.eta * std::sqrt(static_cast<double>(k)));
            break;
        case Variant::politex:
            rate = std::max(cfg_.eta_floor, cfg_.eta / std::sqrt(static_cast<double>(cfg_.phases)));
            break;
        case Variant::rlsvi: break;
    }

    const auto play = ftrl::stable_softmax(index / rate);
    std::copy(play.probs().data(), play.probs().data() + A, out.begin());
    return rate;
}

double BoltzmannAgent::distribution(const State& x, std::span<double> out) const {
    return compute(map_.state_block(x), out);
}

Vector BoltzmannAgent::distribution(const State& x) const {
    Vector p(static_cast<Eigen::Index>(map_.n_actions()));
    distribution(x, std::span<double>(p.data(), map_.n_actions()));
    return p;
}

std::size_t BoltzmannAgent::act(const State& x, Rng& rng) {
    const std::size_t A = map_.n_actions();
    if (n_finite_) {
        const std::size_t i = map_.state_index(x);
        auto row = cache_.row(static_cast<Eigen::Index>(i));
        if (!cached_[i]) {
            Vector p(static_cast<Eigen::Index>(A));
            cache_rate_[i] = compute(map_.state_block(x), std::span<double>(p.data(), A));
            row = p.transpose();
            cached_[i] = 1;
        }
        last_rate_ = cache_rate_[i];
        scratch_.resize(A);
        for (std::size_t a = 0; a < A; ++a) scratch_[a] = row(static_cast<Eigen::Index>(a));
        return rng.categorical(scratch_);
    }
    Vector p(static_cast<Eigen::Index>(A));
    last_rate_ = compute(map_.state_block(x), std::span<double>(p.data(), A));
    return rng.categorical(std::span<const double>(p.data(), A));
}

void BoltzmannAgent::improve(QEstimate estimate, Rng& rng) {
    if (history_.size() >= cfg_.phases) throw PhaseOverflow("improve: called more than K times");
    if (static_cast<std::size_t>(estimate.weights().size()) != map_.dim()) {
        throw InvalidArgument("improve: estimate does not match the feature map");
    }
    const std::size_t k = history_.size();
    const std::size_t A = map_.n_actions();
    for (std::size_t a = 0; a < A; ++a) {
        auto col = stacked_.col(static_cast<Eigen::Index>(k * A + a));
        for (std::size_t i = 0; i < map_.block_dim(); ++i) {
            col(static_cast<Eigen::Index>(i)) = estimate.weights()(static_cast<Eigen::Index>(map_.position(a, i)));
        }
    }
    history_.push_back(std::move(estimate));

    if (cfg_.variant == Variant::aapi) {
        if (map_.kind() == FeatureKind::tabular_one_hot) {
            sample_.resize(history_.size());
            for (std::size_t s = 0; s < sample_.size(); ++s) sample_[s] = s + 1;
        } else {
            sample_ = draw_phase_sample(history_.size(), cfg_.n_max, rng);
        }
    }
    std::fill(cached_.begin(), cached_.end(), 0);
}

Policy BoltzmannAgent::tabular_policy() const {
    if (!n_finite_) throw InvalidArgument("tabular_policy: continuous state space");
    const std::size_t A = map_.n_actions();
    Matrix probs(static_cast<Eigen::Index>(*n_finite_), static_cast<Eigen::Index>(A));
    Vector p(static_cast<Eigen::Index>(A));
    for (std::size_t x = 0; x < *n_finite_; ++x) {
        if (cached_[x]) {
            probs.row(static_cast<Eigen::Index>(x)) = cache_.row(static_cast<Eigen::Index>(x));
        } else {
            compute(map_.state_block(map_.state_at(x)), std::span<double>(p.data(), A));
            probs.row(static_cast<Eigen::Index>(x)) = p.transpose();
        }
    }
    return Policy(std::move(probs));
}

// --- RLSVI ---------------------------------------------------------------------

LinearPosterior linear_posterior(const Matrix& gram, const Vector& rhs, double sigma2, double lambda) {
    if (gram.rows() != gram.cols() || gram.rows() != rhs.size()) throw InvalidArgument("linear_posterior: shape mismatch");
    if (!(sigma2 > 0.0)) throw InvalidArgument("linear_posterior: sigma2 must be positive");
    Matrix precision = gram;
    precision.diagonal().array() += lambda;
    LinearPosterior post;
    post.factor.compute(precision);
    if (precision.rows() == 0 || post.factor.info() != Eigen::Success) {
        throw NumericError("linear_posterior: precision is not positive definite; raise the prior precision");
    }
    post.mean = post.factor.solve(rhs);
    post.sigma2 = sigma2;
    return post;
}

Vector sample_posterior(const LinearPosterior& post, Rng& rng, bool noise) {
    if (!noise) return post.mean;
    Vector z(post.mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    // Cov = sigma2 (L L^T)^{-1}, so L^{-T} z has covariance (L L^T)^{-1}.
    const Vector dev = post.factor.matrixU().solve(z);
    return post.mean + std::sqrt(post.sigma2) * dev;
}

RlsviAgent::RlsviAgent(const AgentConfig& cfg, FeatureMap map, bool episodic, std::size_t horizon)
    : cfg_(cfg), map_(std::move(map)), episodic_(episodic), horizon_(episodic ? horizon : 1),
      n_finite_(map_.n_states()) {
    cfg_.validate();
    if (episodic_ && horizon_ < 1) throw InvalidArgument("RlsviAgent: episodic mode needs a horizon >= 1");
    if (episodic_ && !n_finite_) throw InvalidArgument("RlsviAgent: episodic mode needs a finite state set");
    theta_.assign(horizon_, Vector::Zero(static_cast<Eigen::Index>(map_.dim())));
}

Vector RlsviAgent::q_values(const State& x, std::size_t h) const {
    const Vector block = map_.state_block(x);
    const Vector& theta = theta_[episodic_ ? h % horizon_ : 0];
    const std::size_t A = map_.n_actions();
    Vector q = Vector::Zero(static_cast<Eigen::Index>(A));
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t i = 0; i < map_.block_dim(); ++i) {
            q(static_cast<Eigen::Index>(a)) += theta(static_cast<Eigen::Index>(map_.position(a, i))) * block(static_cast<Eigen::Index>(i));
        }
    }
    return q;
}

std::size_t RlsviAgent::act(const State& x, std::size_t h) const {
    const Vector q = q_values(x, h);
    std::size_t best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a) {
        if (q(a) > q(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(a);
    }
    return best;
}

void RlsviAgent::observe(const Transition& tr, std::size_t h) {
    if (tr.action >= map_.n_actions()) throw InvalidArgument("observe: action out of range");
    const std::size_t step = episodic_ ? h % horizon_ : 0;
    if (n_finite_) {
        auto& g = groups_[Key{step, map_.state_index(tr.state), tr.action, map_.state_index(tr.next)}];
        ++g.count;
        g.reward_sum += tr.reward;
        return;
    }
    Recent item{map_.state_block(tr.state), tr.action, tr.reward, map_.state_block(tr.next)};
    if (recent_.size() < std::max<std::size_t>(1, cfg_.rlsvi.window)) {
        recent_.push_back(std::move(item));
    } else {
        recent_[recent_head_] = std::move(item);
        recent_head_ = (recent_head_ + 1) % recent_.size();
    }
}

double RlsviAgent::max_q(const Vector& next_block, const Vector& theta) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < map_.n_actions(); ++a) {
        double q = 0.0;
        for (std::size_t i = 0; i < map_.block_dim(); ++i) {
            q += theta(static_cast<Eigen::Index>(map_.position(a, i))) * next_block(static_cast<Eigen::Index>(i));
        }
        best = std::max(best, q);
    }
    return best;
}

Vector RlsviAgent::fit(std::size_t h, const Vector* next_theta, double discount, Rng& rng) const {
    const std::size_t A = map_.n_actions();
    const auto B = static_cast<Eigen::Index>(map_.block_dim());
    std::vector<Matrix> gram(A, Matrix::Zero(B, B));
    std::vector<Vector> rhs(A, Vector::Zero(B));

    auto add = [&](const Vector& block, std::size_t a, double weight, double target_sum) {
        gram[a].selfadjointView<Eigen::Lower>().rankUpdate(block, weight);
        rhs[a] += target_sum * block;
    };

    if (n_finite_) {
        const auto lo = groups_.lower_bound(Key{h, 0, 0, 0});
        const auto hi = groups_.lower_bound(Key{h + 1, 0, 0, 0});
        for (auto it = lo; it != hi; ++it) {
            const auto& [key, g] = *it;
            const auto& [hh, x, a, next] = key;
            (void)hh;
            double target = g.reward_sum;
            if (next_theta != nullptr) {
                target += static_cast<double>(g.count) * discount * max_q(map_.state_block(map_.state_at(next)), *next_theta);
            }
            add(map_.state_block(map_.state_at(x)), a, static_cast<double>(g.count), target);
        }
    } else {
        for (const auto& item : recent_) {
            double target = item.reward;
            if (next_theta != nullptr) target += discount * max_q(item.next_block, *next_theta);
            add(item.block, item.action, 1.0, target);
        }
    }

    Vector theta = Vector::Zero(static_cast<Eigen::Index>(map_.dim()));
    for (std::size_t a = 0; a < A; ++a) {
        const Matrix full = gram[a].selfadjointView<Eigen::Lower>();
        const auto post = linear_posterior(full, rhs[a], cfg_.rlsvi.sigma2, cfg_.rlsvi.prior_lambda);
        const Vector sample = sample_posterior(post, rng, cfg_.rlsvi.sample);
        for (Eigen::Index i = 0; i < B; ++i) {
            theta(static_cast<Eigen::Index>(map_.position(a, static_cast<std::size_t>(i)))) = sample(i);
        }
    }
    return theta;
}

void RlsviAgent::update(Rng& rng) {
    if (episodic_) {
        for (std::size_t h = horizon_; h-- > 0;) {
            theta_[h] = fit(h, h + 1 < horizon_ ? &theta_[h + 1] : nullptr, 1.0, rng);
        }
        return;
    }
    const Vector prev = theta_[0];
    theta_[0] = fit(0, &prev, cfg_.rlsvi.discount, rng);
}

// --- Experiment loop -----------------------------------------------------------

LsmcOptions resolve_lsmc(const AgentConfig& cfg, const EnvSpec& spec) {
    LsmcOptions opts;
    double t_mix = cfg.t_mix_estimate;
    if (t_mix <= 0.0 && spec.kind == EnvKind::tabular) {
        const auto mdp = tabular_ergodic_mdp(spec.size, spec.n_actions);
        if (deterministic_policy_count(mdp) != 0) t_mix = mixing_time_bound(mdp, Execution::serial).t_mix_def1;
    }
    std::size_t w = cfg.horizon;
    if (w == 0) {
        w = t_mix > 0.0 ? static_cast<std::size_t>(std::ceil(8.0 * t_mix)) : 64;
        w = std::max<std::size_t>(1, std::min(w, cfg.tau / 2));
    }
    opts.horizon = w;
    opts.ridge = cfg.ridge >= 0.0 ? cfg.ridge : 1e-6 * static_cast<double>(cfg.tau);
    opts.clip = ClipRange::from_mixing_guess(cfg.t_mix_guess, spec.reward_max - spec.reward_min);
    return opts;
}

namespace {

QEstimate exact_estimate(const TabularMdp& mdp, const Policy& pi, const FeatureMap& map, const ClipRange& clip,
                         double* gain) {
    const QTable table = solve_q(mdp, pi);
    Vector w = Vector::Zero(static_cast<Eigen::Index>(map.dim()));
    for (std::size_t x = 0; x < mdp.n_states(); ++x) {
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            w(static_cast<Eigen::Index>(map.position(a, x))) = table.q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
        }
    }
    *gain = table.gain;
    return QEstimate(map, std::move(w), table.gain, clip);
}

RunResult run_rlsvi(const AgentConfig& cfg, const Environment& env, std::uint64_t seed) {
    const EnvSpec& spec = env.spec();
    const FeatureMap map = FeatureMap::for_env(spec);
    const std::size_t T = cfg.total_steps();
    const bool episodic = cfg.rlsvi.mode == RlsviMode::episodic ||
                          (cfg.rlsvi.mode == RlsviMode::automatic && spec.kind == EnvKind::deepsea);
    std::size_t H = cfg.rlsvi.horizon;
    if (episodic && H == 0) {
        if (spec.kind != EnvKind::deepsea) throw InvalidArgument("RLSVI episodic mode needs rlsvi.horizon");
        H = spec.size;
    }
    const std::size_t every = episodic ? H
                              : cfg.rlsvi.update_every > 0
                                  ? cfg.rlsvi.update_every
                                  : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(T))));

    const Rng root(seed);
    Rng env_rng = root.fork(1);
    Rng sample_rng = root.fork(3);

    RlsviAgent agent(cfg, map, episodic, H);
    agent.update(sample_rng);

    RunResult res;
    res.seed = seed;
    res.rewards.reserve(T);
    State x = env.initial_state(env_rng);
    double since = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t h = episodic ? t % H : 0;
        const std::size_t a = agent.act(x, h);
        StepOutcome out = env.step(x, a, env_rng);
        agent.observe(Transition{x, a, out.reward, out.next}, h);
        res.rewards.push_back(out.reward);
        since += out.reward;
        ++count;
        x = std::move(out.next);
        if ((t + 1) % every == 0 || t + 1 == T) {
            try {
                agent.update(sample_rng);
            } catch (const std::exception& e) {
                throw std::runtime_error("rlsvi update at step " + std::to_string(t + 1) + ": " + e.what());
            }
            PhaseInfo info;
            info.phase = res.phases.size() + 1;
            info.gain_estimate = since / static_cast<double>(count);
            for (const auto& th : agent.params()) info.weight_norm += th.squaredNorm();
            info.weight_norm = std::sqrt(info.weight_norm);
            info.policy_change = std::numeric_limits<double>::quiet_NaN();
            res.phases.push_back(info);
            since = 0.0;
            count = 0;
        }
    }
    return res;
}

}  // namespace

RunResult run_experiment(const AgentConfig& cfg, const Environment& env, std::uint64_t seed) {
    cfg.validate();
    if (cfg.variant == Variant::rlsvi) return run_rlsvi(cfg, env, seed);

    const EnvSpec& spec = env.spec();
    const FeatureMap map = FeatureMap::for_env(spec);
    const LsmcOptions lsmc = resolve_lsmc(cfg, spec);
    const bool tabular = spec.kind == EnvKind::tabular;
    if ((cfg.exact_q || cfg.record_policies) && !tabular) {
        throw InvalidArgument("exact_q and record_policies need the tabular environment");
    }
    std::optional<TabularMdp> mdp;
    if (cfg.exact_q) mdp.emplace(tabular_ergodic_mdp(spec.size, spec.n_actions));

    const Rng root(seed);
    Rng env_rng = root.fork(1);
    Rng act_rng = root.fork(2);
    Rng sample_rng = root.fork(3);

    BoltzmannAgent agent(cfg, map);
    const bool finite = map.n_states().has_value();

    RunResult res;
    res.seed = seed;
    res.rewards.reserve(cfg.total_steps());
    std::vector<Trajectory> data;
    State x = env.initial_state(env_rng);
    std::optional<Policy> current;
    if (finite) current.emplace(agent.tabular_policy());

    for (std::size_t k = 0; k < cfg.phases; ++k) {
        try {
            if (cfg.record_policies) res.policies.push_back(*current);
            Trajectory traj;
            traj.phase = k + 1;
            traj.steps.reserve(cfg.tau);
            PhaseInfo info;
            info.phase = k + 1;
            info.eta_min = std::numeric_limits<double>::infinity();
            info.eta_max = -std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < cfg.tau; ++t) {
                const std::size_t a = agent.act(x, act_rng);
                const double rate = agent.last_rate();
                info.eta_min = std::min(info.eta_min, rate);
                info.eta_max = std::max(info.eta_max, rate);
                info.eta_mean += rate;
                StepOutcome out = env.step(x, a, env_rng);
                res.rewards.push_back(out.reward);
                traj.steps.push_back(Transition{x, a, out.reward, out.next});
                x = std::move(out.next);
            }
            info.eta_mean /= static_cast<double>(cfg.tau);

            if (!cfg.use_all_phases) data.clear();
            data.push_back(std::move(traj));
            QEstimate estimate;
            if (cfg.exact_q) {
                estimate = exact_estimate(*mdp, *current, map, lsmc.clip, &info.gain_estimate);
            } else {
                estimate = lsmc_fit(data, map, lsmc);
                info.gain_estimate = estimate.gain_estimate();
            }
            info.weight_norm = estimate.weights().norm();
            agent.improve(std::move(estimate), sample_rng);

            if (finite) {
                Policy next = agent.tabular_policy();
                info.policy_change = next.max_l1_distance(*current);
                current.emplace(std::move(next));
            } else {
                info.policy_change = std::numeric_limits<double>::quiet_NaN();
            }
            res.phases.push_back(info);
        } catch (const std::exception& e) {
            throw std::runtime_error("phase " + std::to_string(k + 1) + " (seed " + std::to_string(seed) + "): " + e.what());
        }
    }
    return res;
}

}  // namespace aapi
