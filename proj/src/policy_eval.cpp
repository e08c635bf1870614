#include "aapi/policy_eval.hpp"

#include "aapi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aapi {

ClipRange ClipRange::from_mixing_guess(double t_mix_guess, double reward_span) {
    const double bound = (2.0 * t_mix_guess + 3.0) * reward_span;
    return ClipRange{-bound, 2.0 * bound};
}

QEstimate::QEstimate(const FeatureMap& map, Vector weights, double gain_estimate, ClipRange clip)
    : weights_(std::move(weights)), gain_(gain_estimate), clip_(clip) {
    if (static_cast<std::size_t>(weights_.size()) != map.dim()) {
        throw InvalidArgument("QEstimate: weight vector does not match the feature dimension");
    }
    const auto B = static_cast<Eigen::Index>(map.block_dim());
    const auto A = static_cast<Eigen::Index>(map.n_actions());
    per_action_.resize(B, A);
    for (Eigen::Index a = 0; a < A; ++a) {
        for (Eigen::Index i = 0; i < B; ++i) {
            per_action_(i, a) = weights_(static_cast<Eigen::Index>(
                map.position(static_cast<std::size_t>(a), static_cast<std::size_t>(i))));
        }
    }
}

void QEstimate::action_values(const Vector& block, std::span<double> out) const {
    const double hi = clip_.lower + clip_.width;
    for (Eigen::Index a = 0; a < per_action_.cols(); ++a) {
        out[static_cast<std::size_t>(a)] = std::clamp(per_action_.col(a).dot(block), clip_.lower, hi);
    }
}

Vector QEstimate::action_values(const Vector& block) const {
    Vector out(per_action_.cols());
    action_values(block, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

double QEstimate::evaluate(const FeatureMap& map, const State& x, std::size_t a) const {
    return action_values(map.state_block(x))(static_cast<Eigen::Index>(a));
}

double estimate_gain(const Trajectory& traj) {
    if (traj.steps.empty()) throw InvalidArgument("estimate_gain: empty trajectory");
    double total = 0.0;
    for (const auto& s : traj.steps) total += s.reward;
    return total / static_cast<double>(traj.steps.size());
}

QEstimate lsmc_fit(std::span<const Trajectory> data, const FeatureMap& map, const LsmcOptions& opts) {
    if (data.empty()) throw InvalidArgument("lsmc_fit: no data");
    if (opts.horizon < 1) throw InvalidArgument("lsmc_fit: horizon must be >= 1");
    if (opts.ridge < 0.0) throw InvalidArgument("lsmc_fit: ridge must be >= 0");

    const std::size_t A = map.n_actions();
    const std::size_t B = map.block_dim();

    // Group samples by action: the normal equations are block diagonal.
    std::vector<std::size_t> count(A, 0);
    for (const auto& traj : data) {
        if (traj.steps.size() <= opts.horizon) throw InvalidArgument("lsmc_fit: trajectory not longer than the horizon");
        const std::size_t n_targets = traj.steps.size() - opts.horizon + 1;
        for (std::size_t t = 0; t < n_targets; ++t) {
            if (traj.steps[t].action >= A) throw InvalidArgument("lsmc_fit: action out of range");
            ++count[traj.steps[t].action];
        }
    }
    std::vector<Matrix> design(A);
    std::vector<Vector> target(A);
    for (std::size_t a = 0; a < A; ++a) {
        design[a].resize(static_cast<Eigen::Index>(count[a]), static_cast<Eigen::Index>(B));
        target[a].resize(static_cast<Eigen::Index>(count[a]));
    }

    std::vector<std::size_t> fill(A, 0);
    std::vector<double> prefix;
    Vector block(static_cast<Eigen::Index>(B));
    double gain = 0.0;
    for (const auto& traj : data) {
        gain = estimate_gain(traj);
        const std::size_t n = traj.steps.size();
        prefix.assign(n + 1, 0.0);
        for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + (traj.steps[t].reward - gain);
        for (std::size_t t = 0; t + opts.horizon <= n; ++t) {
            const auto& step = traj.steps[t];
            const auto row = static_cast<Eigen::Index>(fill[step.action]++);
            map.state_block(step.state, std::span<double>(block.data(), B));
            design[step.action].row(row) = block.transpose();
            target[step.action](row) = prefix[t + opts.horizon] - prefix[t];
        }
    }

    Vector weights = Vector::Zero(static_cast<Eigen::Index>(map.dim()));
    const auto Bi = static_cast<Eigen::Index>(B);
    for (std::size_t a = 0; a < A; ++a) {
        Matrix gram = Matrix::Zero(Bi, Bi);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(design[a].transpose());
        gram = gram.selfadjointView<Eigen::Lower>();
        const Vector rhs = design[a].transpose() * target[a];

        Vector sol;
        if (opts.ridge > 0.0) {
            gram.diagonal().array() += opts.ridge;
            Eigen::LLT<Matrix> llt(gram);
            if (llt.info() != Eigen::Success) throw DegenerateFit("lsmc_fit: normal equations not positive definite");
            sol = llt.solve(rhs);
        } else {
            Eigen::LDLT<Matrix> ldlt(gram);
            const Vector d = ldlt.vectorD();
            const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
            if (ldlt.info() != Eigen::Success || d.size() == 0 || d.minCoeff() <= 1e-12 * scale) {
                throw DegenerateFit("lsmc_fit: singular normal equations; raise the ridge");
            }
            sol = ldlt.solve(rhs);
        }
        for (std::size_t i = 0; i < B; ++i) {
            weights(static_cast<Eigen::Index>(map.position(a, i))) = sol(static_cast<Eigen::Index>(i));
        }
    }
    return QEstimate(map, std::move(weights), gain, opts.clip);
}

QEstimate lsmc_fit(const Trajectory& traj, const FeatureMap& map, const LsmcOptions& opts) {
    return lsmc_fit(std::span<const Trajectory>(&traj, 1), map, opts);
}

std::vector<std::size_t> draw_phase_sample(std::size_t k, std::size_t n_max, Rng& rng) {
    std::vector<std::size_t> all(k);
    std::iota(all.begin(), all.end(), std::size_t{1});
    const std::size_t n = std::min(n_max, k);
    if (n < k) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + rng.uniform_index(k - i);
            std::swap(all[i], all[j]);
        }
        all.resize(n);
        std::sort(all.begin(), all.end());
    }
    return all;
}

double gap_sum(const Vector& block, std::span<const QEstimate> history, std::span<const std::size_t> sample) {
    double total = 0.0;
    for (std::size_t s : sample) {
        if (s == 0 || s > history.size()) throw InvalidArgument("gap_sum: phase index out of range");
        const Vector cur = history[s - 1].action_values(block);
        const Vector prev = s >= 2 ? history[s - 2].action_values(block) : Vector::Zero(cur.size());
        const double gap = (cur - prev).cwiseAbs().maxCoeff();
        total += gap * gap;
    }
    return total;
}

double subsampled_rate(const Vector& block, std::span<const QEstimate> history,
                       std::span<const std::size_t> sample, double eta, double eta_floor) {
    if (history.empty() || sample.empty()) return eta_floor;
    const double correction = static_cast<double>(history.size()) / static_cast<double>(sample.size());
    return std::max(eta_floor, eta * std::sqrt(2.0 * correction * gap_sum(block, history, sample)));
}

double subsampled_rate(const FeatureMap& map, const State& x, std::span<const QEstimate> history,
                       std::size_t n_max, double eta, double eta_floor, Rng& rng) {
    if (history.empty()) return eta_floor;
    const auto sample = draw_phase_sample(history.size(), n_max, rng);
    return subsampled_rate(map.state_block(x), history, sample, eta, eta_floor);
}

double weighted_norm(const Vector& v, const Vector& u) {
    if (v.size() != u.size()) throw InvalidArgument("weighted_norm: size mismatch");
    return std::sqrt((u.array() * v.array().square()).sum());
}

}  // namespace aapi
