#pragma once

#include "aapi/mdp_core.hpp"
#include "aapi/rng.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <variant>

namespace aapi {

struct GridCell {
    int row = 0;
    int col = 0;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Cart position, cart velocity, pole angle (rad), pole tip velocity; plus the
/// number of steps taken in the current episode.
struct CartPoleState {
    std::array<double, 4> obs{};
    int h = 0;
    friend bool operator==(const CartPoleState&, const CartPoleState&) = default;
};

/// Discrete tabular index, DeepSea grid cell, or CartPole physics state.
using State = std::variant<std::size_t, GridCell, CartPoleState>;

enum class EnvKind { tabular, deepsea, cartpole };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

struct EnvSpec {
    EnvKind kind = EnvKind::tabular;
    std::size_t size = 5;       ///< |X| for tabular, grid side N for DeepSea; unused for CartPole
    std::size_t n_actions = 2;  ///< |A| for tabular; always 2 for DeepSea and CartPole
    double reward_min = 0.0;
    double reward_max = 1.0;

    static EnvSpec tabular(std::size_t n_states, std::size_t n_actions = 2);
    static EnvSpec deepsea(std::size_t n);
    static EnvSpec cartpole();
};

struct StepOutcome {
    State next;
    double reward = 0.0;
};

/// Common stepping interface. Instances are immutable; all randomness comes
/// from the caller's stream, so one instance may serve concurrent runs.
class Environment {
public:
    explicit Environment(EnvSpec spec) : spec_(spec) {}
    virtual ~Environment() = default;

    [[nodiscard]] const EnvSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t n_actions() const noexcept { return spec_.n_actions; }

    virtual State initial_state(Rng& rng) const = 0;
    virtual StepOutcome step(const State& state, std::size_t action, Rng& rng) const = 0;

private:
    EnvSpec spec_;
};

std::unique_ptr<Environment> make_env(const EnvSpec& spec);

// --- Tabular ergodic chain -------------------------------------------------
//
// States are 0-based: index 0 is the rewarding state and index x stands for
// the label x+1 in the usual 1-based description. Action index 1 is the
// designated "move down" action.

inline constexpr std::size_t kTabularRewardState = 0;
inline constexpr std::size_t kTabularDesignatedAction = 1;
inline constexpr double kTabularMoveProb = 0.9;

struct TabularStep {
    std::size_t next = 0;
    double reward = 0.0;
};

TabularStep tabular_step(std::size_t n_states, std::size_t n_actions, std::size_t x, std::size_t a, Rng& rng);

/// Exact kernel of the tabular chain, for the exact solvers.
TabularMdp tabular_ergodic_mdp(std::size_t n_states, std::size_t n_actions);

class TabularErgodicEnv final : public Environment {
public:
    TabularErgodicEnv(std::size_t n_states, std::size_t n_actions);
    State initial_state(Rng& rng) const override;
    StepOutcome step(const State& state, std::size_t action, Rng& rng) const override;
    [[nodiscard]] std::size_t n_states() const noexcept { return spec().size; }
};

// --- DeepSea ---------------------------------------------------------------

struct DeepSeaStep {
    GridCell next;
    double reward = 0.0;
};

/// Deterministic continuing DeepSea step on an n x n grid.
DeepSeaStep deepsea_step(int n, GridCell cell, std::size_t a);

/// Hand-coded strategy that climbs to the goal and then revisits it every
/// n steps while paying for as few "right" moves as possible.
std::size_t deepsea_alternating_action(int n, GridCell cell);

class DeepSeaEnv final : public Environment {
public:
    explicit DeepSeaEnv(std::size_t n);
    State initial_state(Rng& rng) const override;
    StepOutcome step(const State& state, std::size_t action, Rng& rng) const override;
    [[nodiscard]] int grid() const noexcept { return static_cast<int>(spec().size); }
};

// --- CartPole --------------------------------------------------------------

struct CartPolePhysics {
    double gravity = 9.8;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.5;
    double force = 10.0;
    double dt = 0.02;
    double angle_limit = 15.0 * 3.14159265358979323846 / 180.0;
    double position_limit = 2.4;
    int max_steps = 200;
    double init_range = 0.05;
};

/// One Euler step of the frictionless cart-pole; no termination handling.
std::array<double, 4> cartpole_dynamics(const std::array<double, 4>& obs, std::size_t a,
                                        const CartPolePhysics& phys = {});

struct CartPoleStep {
    CartPoleState next;
    double reward = 0.0;
    bool reset = false;
};

/// +1 while upright; on failure or at the step cap emits h - 200 and resets.
CartPoleStep cartpole_step(const CartPoleState& state, std::size_t a, Rng& rng, const CartPolePhysics& phys = {});
CartPoleState cartpole_initial(Rng& rng, const CartPolePhysics& phys = {});

class CartPoleEnv final : public Environment {
public:
    CartPoleEnv();
    State initial_state(Rng& rng) const override;
    StepOutcome step(const State& state, std::size_t action, Rng& rng) const override;
};

}  // namespace aapi
