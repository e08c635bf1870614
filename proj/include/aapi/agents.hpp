#pragma once

#include "aapi/envs.hpp"
#include "aapi/features.hpp"
#include "aapi/mdp_core.hpp"
#include "aapi/policy_eval.hpp"
#include "aapi/rng.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace aapi {

enum class Variant { aapi, kaapi, politex, rlsvi };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

enum class RlsviMode { automatic, episodic, continuing };

struct RlsviConfig {
    double sigma2 = 1.0;
    double prior_lambda = 1.0;
    std::size_t horizon = 0;        ///< episodic H; 0 picks N for DeepSea
    std::size_t update_every = 0;   ///< continuing mode; 0 picks ceil(sqrt(T))
    double discount = 0.99;         ///< continuing-mode bootstrap discount
    std::size_t window = 2000;      ///< recent transitions kept for continuous state spaces
    RlsviMode mode = RlsviMode::automatic;  ///< automatic: episodic on DeepSea, continuing elsewhere
    bool sample = true;             ///< false acts on the posterior mean
};

struct AgentConfig {
    Variant variant = Variant::aapi;
    std::size_t tau = 500;
    std::size_t phases = 400;
    double eta = 0.1;
    double eta_floor = 1e-8;
    std::size_t n_max = 30;        ///< subsample size for the per-state learning rate
    std::size_t horizon = 0;       ///< LSMC window; 0 = min(tau/2, ceil(8 t_mix) or 64)
    double ridge = -1.0;           ///< < 0 = 1e-6 * tau
    double t_mix_guess = 16.0;     ///< sets the clip range of Q-estimates
    double t_mix_estimate = 0.0;   ///< 0 = unknown (computed exactly for small tabular chains)
    bool use_all_phases = false;
    bool exact_q = false;          ///< tabular only: evaluate policies with solve_q
    bool record_policies = false;  ///< tabular only: keep pi_1..pi_K in the result
    RlsviConfig rlsvi;

    [[nodiscard]] std::size_t total_steps() const noexcept { return tau * phases; }
    /// Throws InvalidArgument for eta outside [0.01, 1], tau < 2 or phases < 1.
    void validate() const;
};

/// AAPI, k-AAPI and POLITEX: Boltzmann policies over stored Q-estimates.
///
/// pi_{k+1}(.|x) = softmax((sum_{s<=k} Q_s(x,.) + M_{k+1}(x,.)) / eta_k(x)) is
/// recomputed at query time from the weight history, so the state space may
/// be continuous. For finite state sets the distribution is cached per phase.
class BoltzmannAgent {
public:
    BoltzmannAgent(const AgentConfig& cfg, FeatureMap map);

    /// Number of estimates ingested so far (k); the policy in force is pi_{k+1}.
    [[nodiscard]] std::size_t phase() const noexcept { return history_.size(); }
    [[nodiscard]] const std::vector<QEstimate>& history() const noexcept { return history_; }
    [[nodiscard]] const FeatureMap& feature_map() const noexcept { return map_; }
    [[nodiscard]] const std::vector<std::size_t>& rate_sample() const noexcept { return sample_; }

    /// Writes pi_{k+1}(.|x) into `out`; returns eta_k(x) (0 while k = 0).
    double distribution(const State& x, std::span<double> out) const;
    [[nodiscard]] Vector distribution(const State& x) const;

    /// Samples an action; records the rate used in `last_rate()`.
    std::size_t act(const State& x, Rng& rng);
    [[nodiscard]] double last_rate() const noexcept { return last_rate_; }

    /// Appends Q_k. AAPI draws the phase subsample for its learning rate from
    /// `rng` (all phases on tabular features). Throws PhaseOverflow past K.
    void improve(QEstimate estimate, Rng& rng);

    /// pi_{k+1} over every state of a finite feature map.
    [[nodiscard]] Policy tabular_policy() const;

private:
    double compute(const Vector& block, std::span<double> out) const;

    AgentConfig cfg_;
    FeatureMap map_;
    std::vector<QEstimate> history_;
    Matrix stacked_;                     // block_dim x (k * |A|), column s*|A| + a
    std::vector<std::size_t> sample_;    // phases 1..k entering the AAPI rate
    std::optional<std::size_t> n_finite_;
    Matrix cache_;                       // n_states x |A|, rows valid where cached_[x]
    std::vector<double> cache_rate_;
    std::vector<char> cached_;
    std::vector<double> scratch_;
    double last_rate_ = 0.0;
};

/// Gaussian posterior of a Bayesian linear regression with prior N(0, sigma2/lambda I)
/// and noise variance sigma2: precision (G + lambda I) / sigma2, mean (G + lambda I)^{-1} b.
struct LinearPosterior {
    Vector mean;
    Eigen::LLT<Matrix> factor;  ///< of G + lambda I
    double sigma2 = 1.0;
};

/// Throws NumericError when G + lambda I is not positive definite.
LinearPosterior linear_posterior(const Matrix& gram, const Vector& rhs, double sigma2, double lambda);

/// mean + sqrt(sigma2) L^{-T} z with z standard normal; the mean when `noise` is false.
Vector sample_posterior(const LinearPosterior& post, Rng& rng, bool noise = true);

/// Randomized least-squares value iteration.
///
/// Episodic mode keeps one parameter vector per step-in-episode h and fits
/// backwards from Q_H = 0 with targets r + max_a Q_{h+1}(x', a). Continuing
/// mode shares one parameter vector, refits every `update_every` steps with
/// targets r + discount * max_a Q(x', a) under the previous sample.
/// Acting is greedy on the sampled Q with ties to the lowest action index.
class RlsviAgent {
public:
    RlsviAgent(const AgentConfig& cfg, FeatureMap map, bool episodic, std::size_t horizon);

    [[nodiscard]] bool episodic() const noexcept { return episodic_; }
    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
    [[nodiscard]] const std::vector<Vector>& params() const noexcept { return theta_; }

    [[nodiscard]] std::size_t act(const State& x, std::size_t h) const;
    [[nodiscard]] Vector q_values(const State& x, std::size_t h) const;

    void observe(const Transition& tr, std::size_t h);

    /// Refits and resamples every parameter vector from the stored data.
    void update(Rng& rng);

private:
    struct Group {
        std::size_t count = 0;
        double reward_sum = 0.0;
    };
    using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;  // h, x, a, x'
    struct Recent {
        Vector block;
        std::size_t action = 0;
        double reward = 0.0;
        Vector next_block;
    };

    double max_q(const Vector& next_block, const Vector& theta) const;
    Vector fit(std::size_t h, const Vector* next_theta, double discount, Rng& rng) const;

    AgentConfig cfg_;
    FeatureMap map_;
    bool episodic_;
    std::size_t horizon_;
    std::vector<Vector> theta_;
    std::optional<std::size_t> n_finite_;
    std::map<Key, Group> groups_;
    std::vector<Recent> recent_;
    std::size_t recent_head_ = 0;
};

struct PhaseInfo {
    std::size_t phase = 0;
    double gain_estimate = 0.0;
    double eta_min = 0.0;
    double eta_mean = 0.0;
    double eta_max = 0.0;
    double weight_norm = 0.0;
    double policy_change = 0.0;  ///< max_x ||pi_{k+1} - pi_k||_1 on finite maps, NaN otherwise
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<double> rewards;
    std::vector<PhaseInfo> phases;
    std::vector<Policy> policies;  ///< pi_1..pi_K when recorded
};

/// LSMC window and ridge as resolved for one run.
LsmcOptions resolve_lsmc(const AgentConfig& cfg, const EnvSpec& spec);

/// Runs K phases of tau steps (or T steps of RLSVI). Stream layout: the seed
/// keys a root stream; environment, acting and sampling use forks 1, 2 and 3.
RunResult run_experiment(const AgentConfig& cfg, const Environment& env, std::uint64_t seed);

}  // namespace aapi
