#include "aapi/features.hpp"

#include "aapi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aapi {

FeatureMap FeatureMap::tabular(std::size_t n_states, std::size_t n_actions) {
    if (n_states == 0 || n_actions == 0) throw InvalidArgument("FeatureMap::tabular: empty table");
    FeatureMap map(FeatureKind::tabular_one_hot, n_actions, n_states);
    map.n_states_ = n_states;
    return map;
}

FeatureMap FeatureMap::deepsea(std::size_t n) {
    if (n == 0) throw InvalidArgument("FeatureMap::deepsea: empty grid");
    FeatureMap map(FeatureKind::deepsea_indicator, 2, 2 * n);
    map.n_states_ = n;
    return map;
}

FeatureMap FeatureMap::cartpole(int order, std::array<double, 4> lower, std::array<double, 4> upper) {
    if (order < 0) throw InvalidArgument("FeatureMap::cartpole: negative Fourier order");
    for (int j = 0; j < 4; ++j) {
        if (!(upper[j] > lower[j])) throw InvalidArgument("FeatureMap::cartpole: empty normalisation range");
    }
    const int base = order + 1;
    // Coefficient vectors enumerated with the first component most significant.
    std::vector<std::array<int, 4>> coeffs;
    for (int c0 = 0; c0 < base; ++c0)
        for (int c1 = 0; c1 < base; ++c1)
            for (int c2 = 0; c2 < base; ++c2)
                for (int c3 = 0; c3 < base; ++c3) coeffs.push_back({c0, c1, c2, c3});

    FeatureMap map(FeatureKind::cartpole_fourier, 2, 4 + coeffs.size());
    map.order_ = order;
    map.lower_ = lower;
    map.upper_ = upper;
    map.coeffs_ = std::move(coeffs);
    return map;
}

FeatureMap FeatureMap::cartpole(int order) {
    const double angle = 15.0 * std::numbers::pi / 180.0;
    return cartpole(order, {-2.4, -3.0, -angle, -3.5}, {2.4, 3.0, angle, 3.5});
}

FeatureMap FeatureMap::for_env(const EnvSpec& spec) {
    switch (spec.kind) {
        case EnvKind::tabular: return tabular(spec.size, spec.n_actions);
        case EnvKind::deepsea: return deepsea(spec.size);
        case EnvKind::cartpole: return cartpole();
    }
    throw InvalidArgument("FeatureMap::for_env: unknown environment");
}

void FeatureMap::state_block(const State& x, std::span<double> out) const {
    if (out.size() != block_dim_) throw InvalidArgument("FeatureMap::state_block: output has the wrong length");
    switch (kind_) {
        case FeatureKind::tabular_one_hot: {
            const auto* s = std::get_if<std::size_t>(&x);
            if (s == nullptr || *s >= n_states_) throw InvalidArgument("tabular features: state out of range");
            std::fill(out.begin(), out.end(), 0.0);
            out[*s] = 1.0;
            return;
        }
        case FeatureKind::deepsea_indicator: {
            const auto* c = std::get_if<GridCell>(&x);
            const auto n = static_cast<int>(n_states_);
            if (c == nullptr || c->row < 0 || c->col < 0 || c->row >= n || c->col >= n) {
                throw InvalidArgument("deepsea features: cell outside the grid");
            }
            std::fill(out.begin(), out.end(), 0.0);
            out[static_cast<std::size_t>(c->row)] = 1.0;
            out[n_states_ + static_cast<std::size_t>(c->col)] = 1.0;
            return;
        }
        case FeatureKind::cartpole_fourier: {
            const auto* s = std::get_if<CartPoleState>(&x);
            if (s == nullptr) throw InvalidArgument("cartpole features: wrong state kind");
            std::array<double, 4> unit{};
            for (int j = 0; j < 4; ++j) {
                out[static_cast<std::size_t>(j)] = s->obs[j];
                unit[j] = std::clamp((s->obs[j] - lower_[j]) / (upper_[j] - lower_[j]), 0.0, 1.0);
            }
            for (std::size_t k = 0; k < coeffs_.size(); ++k) {
                const auto& c = coeffs_[k];
                const double dot = c[0] * unit[0] + c[1] * unit[1] + c[2] * unit[2] + c[3] * unit[3];
                out[4 + k] = std::cos(std::numbers::pi * dot);
            }
            return;
        }
    }
}

Vector FeatureMap::state_block(const State& x) const {
    Vector b(static_cast<Eigen::Index>(block_dim_));
    state_block(x, std::span<double>(b.data(), block_dim_));
    return b;
}

Vector FeatureMap::features(const State& x, std::size_t a) const {
    if (a >= n_actions_) throw InvalidArgument("FeatureMap::features: action out of range");
    const Vector b = state_block(x);
    Vector phi = Vector::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < block_dim_; ++i) phi(static_cast<Eigen::Index>(position(a, i))) = b(static_cast<Eigen::Index>(i));
    return phi;
}

std::optional<double> FeatureMap::max_norm() const {
    switch (kind_) {
        case FeatureKind::tabular_one_hot: return 1.0;
        case FeatureKind::deepsea_indicator: return std::sqrt(2.0);
        case FeatureKind::cartpole_fourier: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::size_t> FeatureMap::n_states() const {
    switch (kind_) {
        case FeatureKind::tabular_one_hot: return n_states_;
        case FeatureKind::deepsea_indicator: return n_states_ * n_states_;
        case FeatureKind::cartpole_fourier: return std::nullopt;
    }
    return std::nullopt;
}

std::size_t FeatureMap::state_index(const State& x) const {
    switch (kind_) {
        case FeatureKind::tabular_one_hot: {
            const auto* s = std::get_if<std::size_t>(&x);
            if (s == nullptr || *s >= n_states_) throw InvalidArgument("state_index: state out of range");
            return *s;
        }
        case FeatureKind::deepsea_indicator: {
            const auto* c = std::get_if<GridCell>(&x);
            const auto n = static_cast<int>(n_states_);
            if (c == nullptr || c->row < 0 || c->col < 0 || c->row >= n || c->col >= n) {
                throw InvalidArgument("state_index: cell outside the grid");
            }
            return static_cast<std::size_t>(c->row) * n_states_ + static_cast<std::size_t>(c->col);
        }
        case FeatureKind::cartpole_fourier: break;
    }
    throw InvalidArgument("state_index: continuous state space");
}

State FeatureMap::state_at(std::size_t index) const {
    switch (kind_) {
        case FeatureKind::tabular_one_hot:
            if (index >= n_states_) break;
            return State{index};
        case FeatureKind::deepsea_indicator:
            if (index >= n_states_ * n_states_) break;
            return State{GridCell{static_cast<int>(index / n_states_), static_cast<int>(index % n_states_)}};
        case FeatureKind::cartpole_fourier: break;
    }
    throw InvalidArgument("state_at: index out of range or continuous state space");
}

Matrix FeatureMap::feature_matrix() const {
    const auto count = n_states();
    if (!count) throw InvalidArgument("feature_matrix: continuous state space");
    Matrix psi(static_cast<Eigen::Index>(*count * n_actions_), static_cast<Eigen::Index>(dim()));
    for (std::size_t x = 0; x < *count; ++x) {
        const State s = state_at(x);
        for (std::size_t a = 0; a < n_actions_; ++a) {
            psi.row(static_cast<Eigen::Index>(x * n_actions_ + a)) = features(s, a).transpose();
        }
    }
    return psi;
}

}  // namespace aapi
