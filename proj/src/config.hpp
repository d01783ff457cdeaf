#pragma once

/// Run-configuration files.
///
/// The format is plain key = value text with [section] headers and full-line
/// comments starting with '#' or ';'. Every paper constant is a default, so
/// an empty file describes the full reference set-up. Unknown sections or
/// keys are rejected with the offending line number.

#include "harness.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ekb {

struct ScenarioOverrides {
    std::optional<int> nx, ny, n_steps, obs_interval, n_obs_times, linear_max_iter;
    std::optional<double> dx, dy, sim_time_days, noise_sigma, noise_scale, diffusion,
        porosity, specific_storage, rho_f, mu_f, gravity, initial_head, initial_conc,
        ref_mean, ref_stddev, ref_corr_length, ens_mean, ens_stddev, ens_corr_length,
        picard_rel_tol, linear_rel_tol;
    std::optional<std::string> obs_cells;   // "i:j,i:j,..."
    std::optional<std::string> obs_kind;    // head | concentration
    std::optional<std::string> correlation_model;
    // Edge conditions: a number (Dirichlet value) or "no_flow".
    std::optional<std::string> bc_head_south, bc_head_north, bc_head_west, bc_head_east;
    std::optional<std::string> bc_conc_south, bc_conc_north, bc_conc_west, bc_conc_east;
    std::optional<double> well_head;  // value of the interior fixed cell

    bool any() const;
};

struct RunConfig {
    // [plan]
    std::string scenario = "tracer";
    std::vector<std::string> variants = {"classical", "damped",       "local",
                                         "hybrid",    "dual",         "normal_score",
                                         "iterative"};
    std::vector<int> ensemble_sizes = {50, 70, 100, 250, 500, 1000, 2000};
    int n_experiments = 1000;
    std::optional<std::uint64_t> truth_seed;  // default: scenario constant
    std::uint64_t base_experiment_seed = 20180828;
    bool paired = true;

    // [scenario]
    ScenarioOverrides overrides;

    // [variant.*]
    double alpha = 0.1;
    double lambda = 150.0;
    double beta = 0.5;
    StaticDiag static_diag;
    NsSpread ns_spread = NsSpread::NeighborGap;
    NsObsPolicy ns_obs = NsObsPolicy::JointTable;

    // [sweep]
    std::vector<double> sweep_lambda, sweep_beta, sweep_noise_scale;

    // [output] / [run]
    std::string output_dir;  // empty: $ENKFBENCH_OUT or ./enkfbench_out
    int workers = 1;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text form; parse(serialize(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

/// Scenario constants with overrides applied and validated.
ScenarioSpec resolve_scenario(const RunConfig& config);

/// Fully resolved execution plan (scenario, expanded variants, seeds).
ExperimentPlan build_plan(const RunConfig& config);

std::string resolve_output_dir(const RunConfig& config);

} // namespace ekb
