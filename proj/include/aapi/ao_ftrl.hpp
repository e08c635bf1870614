#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aapi::ftrl {

using Vector = Eigen::VectorXd;

/// Default lower bound on the learning rate (guards the first step when the
/// first payoff equals the zero prediction).
inline constexpr double kDefaultEtaFloor = 1e-8;

/// Probability vector over actions.
class SimplexPoint {
public:
    /// Throws InvalidArgument unless entries are >= 0 and sum to 1 within 1e-12.
    explicit SimplexPoint(Vector probs);
    static SimplexPoint uniform(std::size_t n);

    [[nodiscard]] const Vector& probs() const noexcept { return probs_; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(probs_.size()); }
    [[nodiscard]] double operator[](std::size_t i) const { return probs_(static_cast<Eigen::Index>(i)); }

private:
    Vector probs_;
};

/// Per-state accumulator of the optimistic FTRL learner (payoff convention).
struct LearnerState {
    Vector cum_loss;       ///< sum of payoffs fed so far
    Vector side_info;      ///< prediction M_k used against the next payoff (M_1 = 0)
    double rate_stat = 0;  ///< sum_s ||q_s - M_s||_inf^2
    std::size_t step = 0;

    static LearnerState initial(std::size_t n_actions);
};

/// probs proportional to exp(logits - max(logits)). Throws InvalidArgument on
/// non-finite input.
SimplexPoint stable_softmax(const Vector& logits);

/// max(eta_floor, eta * sqrt(2 * (rate_stat + ||new_loss - side_info||_inf^2)))
double learning_rate(const LearnerState& state, const Vector& new_loss, double eta, double eta_floor = kDefaultEtaFloor);

struct StepResult {
    SimplexPoint play;
    LearnerState state;
    double rate = 0.0;  ///< eta_k used to form `play`
};

/// Ingests payoff q_k and prediction M_{k+1}; returns
/// softmax((sum_{s<=k} q_s + M_{k+1}) / eta_k) with the adaptive eta_k.
StepResult step(const LearnerState& state, const Vector& new_loss, const Vector& side_info, double eta,
                double eta_floor = kDefaultEtaFloor);

/// Same update with an externally supplied rate (fixed or sqrt(k) schedules).
/// rate_stat is still accumulated so diagnostics stay comparable.
StepResult step_with_rate(const LearnerState& state, const Vector& new_loss, const Vector& side_info, double rate);

/// Shifted negative entropy log(n) + sum f log f, with 0 log 0 = 0. Lies in [0, log n].
double shifted_neg_entropy(const Vector& f);

struct RegretAudit {
    double regret = 0.0;             ///< sum_t <f* - f_t, q_t>
    double bound = 0.0;              ///< generic AO-FTRL bound with R_max = log|A|
    double positive_term = 0.0;      ///< sqrt(2 R_max sum ||q_t - M_t||^2)
    double stability_term = 0.0;     ///< sum eta_t / 4 ||f_t - f_{t+1}||_1^2
    double prediction_term = 0.0;    ///< <M_{T+1}, f_{T+1} - f*>
    double explicit_bound = 0.0;     ///< (2/eta' + eta' R(f*)) sqrt(sum) - stability + prediction
    bool holds = false;              ///< regret <= bound + 1e-9
};

/// Audits one run of the learner against a comparator.
///
/// losses: q_1..q_T. side_infos: M_1..M_{T+1}. plays: f_1..f_{T+1}.
/// rates: eta_1..eta_T as used to form f_2..f_{T+1}. `eta` is the tuning
/// constant behind the rates (eta_t = eta * sqrt(2 * sum)); it only enters
/// `explicit_bound`. Throws InvalidArgument on misaligned sequences.
RegretAudit regret_audit(std::span<const Vector> losses, std::span<const Vector> side_infos,
                         std::span<const SimplexPoint> plays, std::span<const double> rates,
                         const SimplexPoint& comparator, double eta);

/// Runs the learner over a payoff stream with M_{t+1} = q_t (M_1 = 0) and
/// returns everything regret_audit needs.
struct AuditTrace {
    std::vector<Vector> losses;
    std::vector<Vector> side_infos;
    std::vector<SimplexPoint> plays;
    std::vector<double> rates;
};
AuditTrace run_optimistic(std::span<const Vector> losses, double eta, double eta_floor = kDefaultEtaFloor);

/// sum_t a_t / sqrt(sum_{s<=t} a_s), skipping terms while the prefix sum is 0.
double adaptive_sum(std::span<const double> a);

}  // namespace aapi::ftrl
