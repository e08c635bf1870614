#pragma once

#include "aapi/agents.hpp"
#include "aapi/envs.hpp"
#include "aapi/mdp_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace aapi {

struct ExperimentConfig {
    EnvSpec env;
    AgentConfig agent;
    std::size_t runs = 50;
    std::uint64_t base_seed = 0;
    std::size_t stride = 0;  ///< 0 = max(1, T / 2000)
    int threads = 0;         ///< 0 = OpenMP default; AAPI_THREADS caps either way
    std::string out;

    /// Throws InvalidArgument for runs < 1 or T == 0.
    void validate() const;
};

/// Number of worker threads: `requested` (or the OpenMP default), capped by
/// the AAPI_THREADS environment variable when set to a positive integer.
int thread_budget(int requested = 0);

/// stride, 2 stride, ..., with T always included.
std::vector<std::size_t> logged_steps(std::size_t total, std::size_t stride);

struct Aggregate {
    std::vector<double> mean;
    std::vector<double> std;  ///< population standard deviation
};

/// Column-wise mean and population std over equal-length traces.
/// Throws InvalidArgument on an empty set or ragged input.
Aggregate aggregate(const std::vector<std::vector<double>>& traces);

struct SuiteResult {
    std::vector<std::size_t> steps;
    Aggregate cost;                    ///< c_t = -(sum_{s<=t} r_s) / t
    Aggregate regret;                  ///< t lambda* - sum r; empty unless tabular
    bool has_regret = false;
    double gain_star = 0.0;
    std::vector<double> final_cost;    ///< per run
    std::vector<std::vector<double>> regret_runs;  ///< per run, at `steps`; tabular only
};

/// Runs `runs` seeded experiments (seed_i = base_seed + i) and aggregates the
/// running cost at the logged steps. Each run's trace is reduced before the
/// next aggregation step, so memory stays O(runs * logged steps).
SuiteResult run_suite(const ExperimentConfig& cfg, Execution exec = Execution::parallel);

/// header step,cost_mean,cost_std,regret_mean,regret_std; %.10g; LF endings.
std::string to_csv(const SuiteResult& res);
void write_csv(const SuiteResult& res, const std::string& path);

/// Strided running cost and (optionally) regret of one reward trace.
void reduce_trace(std::span<const double> rewards, std::span<const std::size_t> steps, double gain_star,
                  std::vector<double>& cost, std::vector<double>* regret);

}  // namespace aapi
