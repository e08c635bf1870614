#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace aapi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Serial loops are kept alongside the OpenMP kernels as the reference path.
enum class Execution { serial, parallel };

/// Finite MDP with dense transition tensor P[x][a][x'] and rewards r[x][a] in [0, 1].
class TabularMdp {
public:
    /// `transition` is laid out as [x][a][x'] (row-major), `reward` as [x][a].
    /// Throws InvalidArgument if any slice is not a distribution within 1e-12
    /// or a reward leaves [0, 1].
    TabularMdp(std::size_t n_states, std::size_t n_actions,
               std::span<const double> transition, std::span<const double> reward);

    [[nodiscard]] std::size_t n_states() const noexcept { return n_states_; }
    [[nodiscard]] std::size_t n_actions() const noexcept { return n_actions_; }

    [[nodiscard]] double p(std::size_t x, std::size_t a, std::size_t next) const {
        return by_action_[a](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(next));
    }
    [[nodiscard]] double r(std::size_t x, std::size_t a) const {
        return reward_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
    }

    /// Row-stochastic n x n matrix of action a.
    [[nodiscard]] const Matrix& transition(std::size_t a) const { return by_action_[a]; }
    /// n_states x n_actions.
    [[nodiscard]] const Matrix& reward() const noexcept { return reward_; }

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<Matrix> by_action_;
    Matrix reward_;
};

/// Per-state action distribution, stored as an n_states x n_actions matrix.
class Policy {
public:
    /// Throws InvalidArgument unless every row is on the simplex within 1e-12.
    explicit Policy(Matrix probs);

    static Policy uniform(std::size_t n_states, std::size_t n_actions);
    static Policy deterministic(std::span<const std::size_t> choice, std::size_t n_actions);

    [[nodiscard]] std::size_t n_states() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    [[nodiscard]] std::size_t n_actions() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
    [[nodiscard]] double operator()(std::size_t x, std::size_t a) const {
        return probs_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
    }
    [[nodiscard]] const Matrix& probs() const noexcept { return probs_; }

    /// max_x ||pi(.|x) - other(.|x)||_1
    [[nodiscard]] double max_l1_distance(const Policy& other) const;

private:
    Matrix probs_;
};

struct StationaryDistribution {
    Vector mu;
    double residual = 0.0;  ///< ||mu P - mu||_inf
};

/// Action values, differential state values and gain of one policy.
/// Normalised so that sum_x mu(x) V(x) = 0.
struct QTable {
    Matrix q;
    Vector v;
    double gain = 0.0;
};

struct MixingInfo {
    std::vector<double> per_policy_beta;  ///< one entry per enumerated deterministic policy
    double beta = 0.0;                    ///< max of per_policy_beta
    double t_mix_condition2 = 0.0;        ///< -1 / ln(beta); 0 when beta == 0
    int t_mix_def1 = 1;
};

Matrix induced_transition(const TabularMdp& mdp, const Policy& pi);
Vector induced_reward(const TabularMdp& mdp, const Policy& pi);

/// Power iteration from the uniform distribution until the L1 change between
/// iterates is <= tol. Throws ErgodicityViolation after max_iter iterations.
Vector stationary_power_iteration(const Matrix& P, double tol = 1e-12, long max_iter = 1'000'000);

/// Solves (P^T - I) mu = 0 with sum(mu) = 1 by column-pivoted QR.
/// Throws ErgodicityViolation when the null space is not one-dimensional.
Vector stationary_linear_solve(const Matrix& P);

/// Both routes above; they must agree within 1e-8 (L-inf) and leave a
/// residual <= 1e-10, otherwise ErgodicityViolation.
StationaryDistribution stationary_distribution(const Matrix& P);

double average_reward(const TabularMdp& mdp, const Policy& pi);

QTable solve_q(const TabularMdp& mdp, const Policy& pi);

/// max_{x,a} |Q(x,a) - r(x,a) + gain - sum_x' P(x'|x,a) V(x')| together with
/// max_x |V(x) - sum_a pi(a|x) Q(x,a)|.
double bellman_residual(const TabularMdp& mdp, const Policy& pi, const QTable& table);

/// max over row pairs of half the L1 distance between rows.
double dobrushin_coefficient(const Matrix& P);

/// Smallest t >= 1 with max_x ||P^t(x,.) - mu||_1 <= 1/4.
int mixing_steps_to_quarter(const Matrix& P, const Vector& mu, int max_steps = 1'000'000);

/// Enumerates every deterministic policy (guard: n_actions^n_states <= 1e6).
/// Throws TooLarge past the guard and ErgodicityViolation if the worst
/// Dobrushin coefficient reaches 1.
MixingInfo mixing_time_bound(const TabularMdp& mdp, Execution exec = Execution::parallel);

/// Number of deterministic policies, or 0 if it overflows `cap`.
std::size_t deterministic_policy_count(const TabularMdp& mdp, std::size_t cap = 1'000'000);

/// Decodes enumeration index `code` into per-state action choices (base n_actions).
std::vector<std::size_t> decode_deterministic(std::size_t code, std::size_t n_states, std::size_t n_actions);

}  // namespace aapi
