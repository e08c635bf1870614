#include "aapi/envs.hpp"

#include "aapi/errors.hpp"

#include <cmath>
#include <vector>

namespace aapi {

std::string to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::tabular: return "tabular";
        case EnvKind::deepsea: return "deepsea";
        case EnvKind::cartpole: return "cartpole";
    }
    return "unknown";
}

EnvKind parse_env_kind(const std::string& name) {
    if (name == "tabular") return EnvKind::tabular;
    if (name == "deepsea") return EnvKind::deepsea;
    if (name == "cartpole") return EnvKind::cartpole;
    throw InvalidArgument("unknown environment '" + name + "'");
}

EnvSpec EnvSpec::tabular(std::size_t n_states, std::size_t n_actions) {
    return EnvSpec{EnvKind::tabular, n_states, n_actions, 0.0, 1.0};
}

EnvSpec EnvSpec::deepsea(std::size_t n) {
    return EnvSpec{EnvKind::deepsea, n, 2, -1.0, 2.0 * static_cast<double>(n)};
}

EnvSpec EnvSpec::cartpole() {
    return EnvSpec{EnvKind::cartpole, 0, 2, -200.0, 1.0};
}

std::unique_ptr<Environment> make_env(const EnvSpec& spec) {
    switch (spec.kind) {
        case EnvKind::tabular: return std::make_unique<TabularErgodicEnv>(spec.size, spec.n_actions);
        case EnvKind::deepsea: return std::make_unique<DeepSeaEnv>(spec.size);
        case EnvKind::cartpole: return std::make_unique<CartPoleEnv>();
    }
    throw InvalidArgument("make_env: unknown kind");
}

// --- Tabular -----------------------------------------------------------------

TabularStep tabular_step(std::size_t n_states, std::size_t n_actions, std::size_t x, std::size_t a, Rng& rng) {
    if (n_states < 2 || n_actions < 2) throw InvalidArgument("tabular_step: need at least 2 states and 2 actions");
    if (x >= n_states || a >= n_actions) throw InvalidArgument("tabular_step: state or action out of range");

    TabularStep out;
    out.reward = x == kTabularRewardState ? 1.0 : 0.0;
    if (x == kTabularRewardState) {
        out.next = 1 + rng.uniform_index(n_states - 1);
    } else if (a == kTabularDesignatedAction && rng.bernoulli(kTabularMoveProb)) {
        out.next = x - 1;
    } else {
        out.next = rng.uniform_index(n_states);
    }
    return out;
}

TabularMdp tabular_ergodic_mdp(std::size_t n_states, std::size_t n_actions) {
    if (n_states < 2 || n_actions < 2) throw InvalidArgument("tabular_ergodic_mdp: need at least 2 states and 2 actions");
    const double n = static_cast<double>(n_states);
    std::vector<double> P(n_states * n_actions * n_states, 0.0);
    std::vector<double> r(n_states * n_actions, 0.0);
    for (std::size_t x = 0; x < n_states; ++x) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            double* row = &P[(x * n_actions + a) * n_states];
            if (x == kTabularRewardState) {
                r[x * n_actions + a] = 1.0;
                for (std::size_t y = 1; y < n_states; ++y) row[y] = 1.0 / (n - 1.0);
            } else if (a == kTabularDesignatedAction) {
                for (std::size_t y = 0; y < n_states; ++y) row[y] = (1.0 - kTabularMoveProb) / n;
                row[x - 1] += kTabularMoveProb;
            } else {
                for (std::size_t y = 0; y < n_states; ++y) row[y] = 1.0 / n;
            }
        }
    }
    return TabularMdp(n_states, n_actions, P, r);
}

TabularErgodicEnv::TabularErgodicEnv(std::size_t n_states, std::size_t n_actions)
    : Environment(EnvSpec::tabular(n_states, n_actions)) {
    if (n_states < 2 || n_actions < 2) throw InvalidArgument("TabularErgodicEnv: need at least 2 states and 2 actions");
}

State TabularErgodicEnv::initial_state(Rng& rng) const {
    return State{rng.uniform_index(n_states())};
}

StepOutcome TabularErgodicEnv::step(const State& state, std::size_t action, Rng& rng) const {
    const auto* x = std::get_if<std::size_t>(&state);
    if (x == nullptr) throw InvalidArgument("TabularErgodicEnv: wrong state kind");
    const auto res = tabular_step(n_states(), n_actions(), *x, action, rng);
    return StepOutcome{State{res.next}, res.reward};
}

// --- DeepSea -----------------------------------------------------------------

DeepSeaStep deepsea_step(int n, GridCell cell, std::size_t a) {
    if (n < 1 || cell.row < 0 || cell.col < 0 || cell.row >= n || cell.col >= n) {
        throw InvalidArgument("deepsea_step: cell outside the grid");
    }
    if (a > 1) throw InvalidArgument("deepsea_step: action must be 0 or 1");
    DeepSeaStep out;
    const bool at_goal = cell.row == n - 1 && cell.col == n - 1;
    out.reward = at_goal ? 2.0 * n : (a == 0 ? 0.0 : -1.0);
    out.next.row = (cell.row + 1) % n;
    out.next.col = a == 0 ? std::max(0, cell.col - 1) : std::min(n - 1, cell.col + 1);
    return out;
}

std::size_t deepsea_alternating_action(int n, GridCell cell) {
    if (cell.row == n - 1 && cell.col == n - 1) return 1;
    // Move left whenever the goal stays reachable on this descent.
    const int next_row = (cell.row + 1) % n;
    const int next_col = std::max(0, cell.col - 1);
    const int rows_left = n - 1 - next_row;
    return (n - 1 - next_col) <= rows_left ? 0 : 1;
}

DeepSeaEnv::DeepSeaEnv(std::size_t n) : Environment(EnvSpec::deepsea(n)) {
    if (n < 1) throw InvalidArgument("DeepSeaEnv: grid size must be positive");
}

State DeepSeaEnv::initial_state(Rng&) const {
    return State{GridCell{0, 0}};
}

StepOutcome DeepSeaEnv::step(const State& state, std::size_t action, Rng&) const {
    const auto* cell = std::get_if<GridCell>(&state);
    if (cell == nullptr) throw InvalidArgument("DeepSeaEnv: wrong state kind");
    const auto res = deepsea_step(grid(), *cell, action);
    return StepOutcome{State{res.next}, res.reward};
}

// --- CartPole ----------------------------------------------------------------

std::array<double, 4> cartpole_dynamics(const std::array<double, 4>& obs, std::size_t a, const CartPolePhysics& phys) {
    const auto [x, x_dot, theta, theta_dot] = obs;
    const double force = a == 1 ? phys.force : -phys.force;
    const double total_mass = phys.cart_mass + phys.pole_mass;
    const double pole_ml = phys.pole_mass * phys.half_length;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);

    const double temp = (force + pole_ml * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc = (phys.gravity * sin_t - cos_t * temp) /
                             (phys.half_length * (4.0 / 3.0 - phys.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;

    return {x + phys.dt * x_dot, x_dot + phys.dt * x_acc, theta + phys.dt * theta_dot, theta_dot + phys.dt * theta_acc};
}

CartPoleState cartpole_initial(Rng& rng, const CartPolePhysics& phys) {
    CartPoleState s;
    for (auto& v : s.obs) v = rng.uniform(-phys.init_range, phys.init_range);
    s.h = 0;
    return s;
}

CartPoleStep cartpole_step(const CartPoleState& state, std::size_t a, Rng& rng, const CartPolePhysics& phys) {
    if (a > 1) throw InvalidArgument("cartpole_step: action must be 0 or 1");
    CartPoleStep out;
    out.next.obs = cartpole_dynamics(state.obs, a, phys);
    out.next.h = state.h + 1;
    const bool failed = std::abs(out.next.obs[2]) > phys.angle_limit || std::abs(out.next.obs[0]) > phys.position_limit;
    if (failed || out.next.h >= phys.max_steps) {
        out.reward = static_cast<double>(out.next.h - phys.max_steps);
        out.reset = true;
        out.next = cartpole_initial(rng, phys);
    } else {
        out.reward = 1.0;
    }
    return out;
}

CartPoleEnv::CartPoleEnv() : Environment(EnvSpec::cartpole()) {}

State CartPoleEnv::initial_state(Rng& rng) const {
    return State{cartpole_initial(rng)};
}

StepOutcome CartPoleEnv::step(const State& state, std::size_t action, Rng& rng) const {
    const auto* s = std::get_if<CartPoleState>(&state);
    if (s == nullptr) throw InvalidArgument("CartPoleEnv: wrong state kind");
    const auto res = cartpole_step(*s, action, rng);
    return StepOutcome{State{res.next}, res.reward};
}

}  // namespace aapi
