#pragma once

#include "aapi/harness.hpp"
#include "aapi/mdp_core.hpp"

#include <string>

namespace aapi {

/// {"n_states": n, "n_actions": A, "transition": [[[..x'..]..a..]..x..], "reward": [[..a..]..x..]}
TabularMdp mdp_from_json(const std::string& text);
std::string mdp_to_json(const TabularMdp& mdp);
TabularMdp load_mdp(const std::string& path);

/// {"probs": [[..a..]..x..]} or a bare nested array.
Policy policy_from_json(const std::string& text);
std::string policy_to_json(const Policy& pi);
Policy load_policy(const std::string& path);

/// {"gain": .., "v": [..], "q": [[..]..]}
std::string qtable_to_json(const QTable& table);

/// Overlays keys of a JSON config onto `cfg`. Keys mirror the CLI flags
/// (env, env_size, actions, agent, tau, phases, eta, runs, seed, stride, out,
/// threads, horizon, ridge, n_max, t_mix_guess, exact_q, use_all_phases or
/// eval.use_all_phases, rlsvi.{sigma2, prior_lambda, horizon, update_every,
/// discount, window, mode}). Unknown keys throw InvalidArgument.
void apply_config_json(const std::string& text, ExperimentConfig& cfg);

std::string read_file(const std::string& path);

}  // namespace aapi
