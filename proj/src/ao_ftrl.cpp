#include "aapi/ao_ftrl.hpp"

#include "aapi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace aapi::ftrl {

namespace {

void check_same_size(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": action dimensions differ");
}

}  // namespace

SimplexPoint::SimplexPoint(Vector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) throw InvalidArgument("SimplexPoint: empty vector");
    if ((probs_.array() < 0.0).any() || !probs_.allFinite() || std::abs(probs_.sum() - 1.0) > 1e-12) {
        throw InvalidArgument("SimplexPoint: not a probability vector");
    }
}

SimplexPoint SimplexPoint::uniform(std::size_t n) {
    return SimplexPoint(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

LearnerState LearnerState::initial(std::size_t n_actions) {
    const auto n = static_cast<Eigen::Index>(n_actions);
    return LearnerState{Vector::Zero(n), Vector::Zero(n), 0.0, 0};
}

SimplexPoint stable_softmax(const Vector& logits) {
    if (logits.size() == 0 || !logits.allFinite()) throw InvalidArgument("stable_softmax: non-finite or empty logits");
    Vector e = (logits.array() - logits.maxCoeff()).exp();
    e /= e.sum();
    return SimplexPoint(std::move(e));
}

double learning_rate(const LearnerState& state, const Vector& new_loss, double eta, double eta_floor) {
    check_same_size(new_loss, state.side_info, "learning_rate");
    const double gap = (new_loss - state.side_info).cwiseAbs().maxCoeff();
    return std::max(eta_floor, eta * std::sqrt(2.0 * (state.rate_stat + gap * gap)));
}

StepResult step_with_rate(const LearnerState& state, const Vector& new_loss, const Vector& side_info, double rate) {
    check_same_size(new_loss, state.cum_loss, "step");
    check_same_size(side_info, state.cum_loss, "step");
    check_same_size(state.side_info, state.cum_loss, "step");
    if (!(rate > 0.0)) throw InvalidArgument("step: learning rate must be positive");

    LearnerState next;
    const double gap = (new_loss - state.side_info).cwiseAbs().maxCoeff();
    next.cum_loss = state.cum_loss + new_loss;
    next.rate_stat = state.rate_stat + gap * gap;
    next.side_info = side_info;
    next.step = state.step + 1;

    SimplexPoint play = stable_softmax((next.cum_loss + side_info) / rate);
    return StepResult{std::move(play), std::move(next), rate};
}

StepResult step(const LearnerState& state, const Vector& new_loss, const Vector& side_info, double eta,
                double eta_floor) {
    check_same_size(new_loss, state.side_info, "step");
    return step_with_rate(state, new_loss, side_info, learning_rate(state, new_loss, eta, eta_floor));
}

double shifted_neg_entropy(const Vector& f) {
    double acc = std::log(static_cast<double>(f.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        if (f(i) > 0.0) acc += f(i) * std::log(f(i));
    }
    return acc;
}

RegretAudit regret_audit(std::span<const Vector> losses, std::span<const Vector> side_infos,
                         std::span<const SimplexPoint> plays, std::span<const double> rates,
                         const SimplexPoint& comparator, double eta) {
    const std::size_t T = losses.size();
    if (side_infos.size() != T + 1 || plays.size() != T + 1 || rates.size() != T) {
        throw InvalidArgument("regret_audit: expected T losses, T rates, T+1 side-infos and T+1 plays");
    }
    const Eigen::Index n = comparator.probs().size();
    for (std::size_t t = 0; t <= T; ++t) {
        if ((t < T && losses[t].size() != n) || side_infos[t].size() != n || plays[t].probs().size() != n) {
            throw InvalidArgument("regret_audit: action dimensions differ");
        }
    }

    RegretAudit out;
    const Vector& fstar = comparator.probs();
    double sum_sq = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        out.regret += (fstar - plays[t].probs()).dot(losses[t]);
        const double gap = (losses[t] - side_infos[t]).cwiseAbs().maxCoeff();
        sum_sq += gap * gap;
        const double move = (plays[t].probs() - plays[t + 1].probs()).cwiseAbs().sum();
        out.stability_term += rates[t] / 4.0 * move * move;
    }
    const double r_max = std::log(static_cast<double>(n));
    out.positive_term = std::sqrt(2.0 * r_max * sum_sq);
    // Payoff convention: the loss-form term <M, f* - f> flips sign.
    out.prediction_term = side_infos[T].dot(plays[T].probs() - fstar);
    out.bound = out.positive_term - out.stability_term + out.prediction_term;

    const double eta_prime = eta * std::sqrt(2.0);
    out.explicit_bound = (2.0 / eta_prime + eta_prime * shifted_neg_entropy(fstar)) * std::sqrt(sum_sq) -
                         out.stability_term + out.prediction_term;
    out.holds = out.regret <= out.bound + 1e-9;
    return out;
}

AuditTrace run_optimistic(std::span<const Vector> losses, double eta, double eta_floor) {
    if (losses.empty()) throw InvalidArgument("run_optimistic: empty loss stream");
    const auto n = static_cast<std::size_t>(losses.front().size());
    AuditTrace trace;
    LearnerState state = LearnerState::initial(n);
    trace.side_infos.push_back(state.side_info);
    trace.plays.push_back(SimplexPoint::uniform(n));
    for (const Vector& q : losses) {
        auto res = step(state, q, q, eta, eta_floor);
        trace.losses.push_back(q);
        trace.side_infos.push_back(q);
        trace.plays.push_back(std::move(res.play));
        trace.rates.push_back(res.rate);
        state = std::move(res.state);
    }
    return trace;
}

double adaptive_sum(std::span<const double> a) {
    double prefix = 0.0;
    double acc = 0.0;
    for (double v : a) {
        if (v < 0.0) throw InvalidArgument("adaptive_sum: negative term");
        prefix += v;
        if (prefix > 0.0) acc += v / std::sqrt(prefix);
    }
    return acc;
}

}  // namespace aapi::ftrl
