#pragma once

#include "aapi/envs.hpp"
#include "aapi/mdp_core.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>

namespace aapi {

enum class FeatureKind { tabular_one_hot, deepsea_indicator, cartpole_fourier };

/// Linear state-action features phi(x, a) in R^d.
///
/// Every kind is built from a per-state block b(x) of length block_dim() that
/// is scattered into phi(x, a) at position(a, i), with the positions of
/// different actions disjoint. One weight vector therefore represents Q(., .)
/// for all actions, and the least-squares normal equations split per action.
///
///   tabular   b(x) = e_x (|X|),            position(a, i) = i * |A| + a
///   deepsea   b(x) = [e_row ; e_col] (2N), position(a, i) = a * 2N + i
///   cartpole  b(x) = [obs ; cos(pi c.s)] (4 + (order+1)^4), position(a, i) = a * B + i
class FeatureMap {
public:
    static FeatureMap tabular(std::size_t n_states, std::size_t n_actions);
    static FeatureMap deepsea(std::size_t n);
    /// `lower` / `upper` are the normalisation bounds of the four observation
    /// components; the rescaled observation is clamped to [0, 1].
    static FeatureMap cartpole(int order, std::array<double, 4> lower, std::array<double, 4> upper);
    /// Default CartPole bounds: position 2.4, velocity 3, angle 15 deg, tip velocity 3.5.
    static FeatureMap cartpole(int order = 4);
    static FeatureMap for_env(const EnvSpec& spec);

    [[nodiscard]] FeatureKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t n_actions() const noexcept { return n_actions_; }
    [[nodiscard]] std::size_t block_dim() const noexcept { return block_dim_; }
    [[nodiscard]] std::size_t dim() const noexcept { return block_dim_ * n_actions_; }
    [[nodiscard]] std::size_t position(std::size_t a, std::size_t i) const noexcept {
        return kind_ == FeatureKind::tabular_one_hot ? i * n_actions_ + a : a * block_dim_ + i;
    }

    /// Fills out[0..block_dim) with b(x). Throws InvalidArgument for a state of
    /// the wrong kind or outside the grid / table.
    void state_block(const State& x, std::span<double> out) const;
    [[nodiscard]] Vector state_block(const State& x) const;

    /// Dense phi(x, a).
    [[nodiscard]] Vector features(const State& x, std::size_t a) const;

    /// max_{x,a} ||phi(x, a)||_2 for kinds with a finite state set.
    [[nodiscard]] std::optional<double> max_norm() const;

    /// Size of the state set when finite (tabular, deepsea).
    [[nodiscard]] std::optional<std::size_t> n_states() const;
    [[nodiscard]] std::size_t state_index(const State& x) const;
    [[nodiscard]] State state_at(std::size_t index) const;

    /// |X||A| x d matrix with row x * |A| + a equal to phi(x, a). Finite kinds only.
    [[nodiscard]] Matrix feature_matrix() const;

    [[nodiscard]] int fourier_order() const noexcept { return order_; }

private:
    FeatureMap(FeatureKind kind, std::size_t n_actions, std::size_t block_dim)
        : kind_(kind), n_actions_(n_actions), block_dim_(block_dim) {}

    FeatureKind kind_;
    std::size_t n_actions_;
    std::size_t block_dim_;
    std::size_t n_states_ = 0;  // tabular |X| or DeepSea N
    int order_ = 0;
    std::array<double, 4> lower_{};
    std::array<double, 4> upper_{};
    std::vector<std::array<int, 4>> coeffs_;
};

}  // namespace aapi
