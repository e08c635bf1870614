#pragma once

#include "aapi/envs.hpp"
#include "aapi/features.hpp"
#include "aapi/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace aapi {

struct Transition {
    State state;
    std::size_t action = 0;
    double reward = 0.0;
    State next;
};

/// Transitions collected while one policy was held fixed.
struct Trajectory {
    std::vector<Transition> steps;
    std::size_t phase = 0;
};

/// Q-estimates are clipped to [lower, lower + width].
struct ClipRange {
    double lower = -35.0;
    double width = 70.0;

    /// lower = -(2 t + 3) * span, width = 2 (2 t + 3) * span, where span is the
    /// reward range of the environment (1 for rewards in [0, 1]).
    static ClipRange from_mixing_guess(double t_mix_guess, double reward_span = 1.0);
};

/// Linear action-value estimate Q(x, a) = clip(phi(x, a)^T w).
class QEstimate {
public:
    QEstimate() = default;
    QEstimate(const FeatureMap& map, Vector weights, double gain_estimate, ClipRange clip);

    [[nodiscard]] const Vector& weights() const noexcept { return weights_; }
    [[nodiscard]] double gain_estimate() const noexcept { return gain_; }
    [[nodiscard]] const ClipRange& clip() const noexcept { return clip_; }

    /// Clipped values for every action given a precomputed state block b(x).
    void action_values(const Vector& block, std::span<double> out) const;
    [[nodiscard]] Vector action_values(const Vector& block) const;
    [[nodiscard]] double evaluate(const FeatureMap& map, const State& x, std::size_t a) const;

private:
    Vector weights_;
    Matrix per_action_;  // block_dim x n_actions view of weights_
    double gain_ = 0.0;
    ClipRange clip_;
};

/// Mean reward of the phase. Throws InvalidArgument when empty.
double estimate_gain(const Trajectory& traj);

struct LsmcOptions {
    std::size_t horizon = 64;  ///< number of differential rewards summed into each target
    double ridge = 0.0;
    ClipRange clip;
};

/// Least-squares Monte Carlo on differential returns:
/// y_t = sum_{i < horizon} (r_{t+i} - gain), one target for every window that
/// fits inside its trajectory; w = argmin sum (phi_t^T w - y_t)^2 + ridge ||w||^2.
/// Each trajectory uses its own gain estimate; the returned gain is that of the
/// last trajectory. Throws DegenerateFit when ridge == 0 and the normal
/// equations are singular, InvalidArgument when a trajectory is not longer than
/// the horizon.
QEstimate lsmc_fit(std::span<const Trajectory> data, const FeatureMap& map, const LsmcOptions& opts);
QEstimate lsmc_fit(const Trajectory& traj, const FeatureMap& map, const LsmcOptions& opts);

/// Draws min(n_max, k) distinct phase indices from 1..k, in increasing order.
std::vector<std::size_t> draw_phase_sample(std::size_t k, std::size_t n_max, Rng& rng);

/// eta * sqrt(2 * (k / n) * sum_{s in sample} ||Q_s(x,.) - Q_{s-1}(x,.)||_inf^2),
/// floored at eta_floor. history[s-1] holds Q_s and Q_0 = 0. Returns eta_floor
/// for an empty history.
double subsampled_rate(const Vector& block, std::span<const QEstimate> history,
                       std::span<const std::size_t> sample, double eta, double eta_floor);

/// Convenience overload that draws the sample itself.
double subsampled_rate(const FeatureMap& map, const State& x, std::span<const QEstimate> history,
                       std::size_t n_max, double eta, double eta_floor, Rng& rng);

/// sum over the sample of squared inf-norm gaps (the radicand before scaling).
double gap_sum(const Vector& block, std::span<const QEstimate> history, std::span<const std::size_t> sample);

/// ||v||_u = sqrt(sum u_i v_i^2)
double weighted_norm(const Vector& v, const Vector& u);

}  // namespace aapi
