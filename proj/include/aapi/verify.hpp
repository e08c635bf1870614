#pragma once

#include "aapi/agents.hpp"
#include "aapi/mdp_core.hpp"
#include "aapi/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aapi {

/// One checked inequality (or equality, see `performance_difference`).
/// holds == (lhs <= rhs + tolerance); slack = rhs + tolerance - lhs.
struct LemmaReport {
    std::string lemma;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool holds = false;
    std::string instance;
};

LemmaReport make_report(std::string lemma, double lhs, double rhs, double tol, std::string instance);

/// {"lemma":..,"lhs":..,"rhs":..,"slack":..,"holds":..,"instance":..}
std::string to_json_line(const LemmaReport& r);

// --- instance generators -----------------------------------------------------

/// Rows are (1 - mix) * Dirichlet(1) + mix * uniform, rewards uniform in [0, 1].
/// Every Dobrushin coefficient is then at most 1 - mix.
TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, Rng& rng, double mix = 0.1);

/// Each row drawn from Dirichlet(1).
Policy random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng);

/// Mixes each row towards a random distribution so that max_x ||pi' - pi||_1 <= radius.
Policy perturb_policy(const Policy& pi, double radius, Rng& rng);

// --- exact solvers -----------------------------------------------------------

struct OptimalPolicy {
    Policy policy;
    double gain = 0.0;
    int iterations = 0;
};

/// Howard policy iteration for ergodic average-reward MDPs, starting from
/// action 0 everywhere; the incumbent action is kept on ties (within 1e-12).
OptimalPolicy policy_iteration(const TabularMdp& mdp);

// --- checks ------------------------------------------------------------------

/// lambda_pi - lambda_pihat against sum_{x,a} mu_pi(x) (pi - pihat)(a|x) Q_pihat(x,a).
/// lhs is the gain difference, rhs the occupancy-weighted sum; holds when
/// |lhs - rhs| <= tol (slack = tol - |lhs - rhs|).
LemmaReport performance_difference(const TabularMdp& mdp, const Policy& pi, const Policy& pihat, double tol = 1e-8);

/// max_{x,a} |Q_next - Q_prev| <= t^2 log2(K)^2 max_x ||pi_prev - pi_next||_1 + 2 / K^3,
/// with t = ceil(t_mix) (Condition-2 constant). Tolerance 1e-9.
LemmaReport relative_q_bound(const TabularMdp& mdp, const Policy& pi_prev, const Policy& pi_next, std::size_t K,
                             double t_mix);
LemmaReport relative_q_bound(const TabularMdp& mdp, const Policy& pi_prev, const Policy& pi_next, std::size_t K);

/// |sum_t (lambda_{pi_t} - r_t)| <= K t + 4 sqrt(2) t sqrt(K T log(T / delta)),
/// where pi_t = policies[t / tau].
LemmaReport empirical_gain_concentration(std::span<const double> rewards, std::span<const Policy> policies,
                                         std::size_t tau, const TabularMdp& mdp, double delta, double t_mix);

/// max_i |Psi_i (what - w)| <= C_Psi ||Psi (what - w)||_u / sqrt(sigma) with
/// sigma = lambda_min(Psi^T diag(u) Psi) and C_Psi the largest row norm.
/// Throws ExcitationViolation when sigma is not positive.
LemmaReport linf_weighted_bound(const Matrix& psi, const Vector& u, const Vector& w, const Vector& what,
                                double tol = 1e-9);

/// sum_t a_t / sqrt(sum_{s<=t} a_s) <= 2 sqrt(sum a_t) + 1e-12.
LemmaReport mcmahan_check(std::span<const double> a);

/// Max Bellman residual of solve_q against 1e-10.
LemmaReport bellman_check(const TabularMdp& mdp, const Policy& pi);

/// Learner run over `losses` with M_{t+1} = q_t, audited against the best
/// fixed action. eta <= 0 picks 1 / sqrt(log |A|), the tuning under which the
/// checked bound is stated.
LemmaReport aoftrl_check(std::span<const Vector> losses, double eta = 0.0);

// --- regret ------------------------------------------------------------------

/// Cumulative regret R_t = t lambda* - sum r and its two parts: the
/// concentration term sum (lambda_{pi_s} - r_s) and the pseudo-regret
/// sum (lambda* - lambda_{pi_s}). Sampled at `steps` (1-based step counts).
struct RegretCurves {
    std::vector<std::size_t> steps;
    std::vector<double> total;
    std::vector<double> concentration;
    std::vector<double> pseudo;
};

RegretCurves regret_curves(std::span<const double> rewards, std::span<const Policy> policies, std::size_t tau,
                           const TabularMdp& mdp, double gain_star, std::span<const std::size_t> steps);

/// Least-squares slope of log(value) against log(step) over points with
/// step >= from_step. Non-positive values are skipped; NaN if fewer than 2 points remain.
double loglog_slope(std::span<const std::size_t> steps, std::span<const double> values, std::size_t from_step);

/// One-sided Mann-Kendall test for a decreasing trend. Returns the normal
/// score Z (continuity corrected, tie-adjusted variance); decreasing at level
/// alpha when Z < -z_{1-alpha}.
double mann_kendall_z(std::span<const double> series);

// --- suites ------------------------------------------------------------------

enum class Suite { perfdiff, relq, aoftrl, linf, gain, mcmahan, bellman };

std::string to_string(Suite s);
Suite parse_suite(const std::string& name);

struct SuiteOptions {
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    Execution exec = Execution::parallel;
    double eta = 0.0;              ///< aoftrl tuning constant; <= 0 = 1 / sqrt(log |A|)
    double delta = 0.05;           ///< gain concentration level
    AgentConfig live;              ///< agent used by the live relq check and the gain suite
    std::size_t live_states = 5;
    std::size_t live_actions = 2;
    bool live_relq = true;         ///< relq: also check one live AAPI run
};

/// Trial i draws from Rng(seed + i). Results are ordered by trial.
std::vector<LemmaReport> run_verify_suite(Suite suite, const SuiteOptions& opts);

}  // namespace aapi
