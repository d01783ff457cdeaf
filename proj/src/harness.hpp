#pragma once

/// Synthetic-experiment orchestration.
///
/// One experiment = one assimilation run of a variant against the fixed
/// synthetic truth, distinguished only by its seed (initial fields and
/// measurement perturbations). Seeds are keyed by experiment index, not by
/// variant or ensemble size, so paired comparisons consume identical draws.
/// Plans execute the full (variant, n_e, experiment) product with resumable
/// CSV storage; rows are committed in canonical order so the output does not
/// depend on the worker count.

#include "scenario.hpp"
#include "variants.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ekb {

/// RMSE between an estimated mean log-permeability field and the reference.
double compute_rmse(const Eigen::VectorXd& mean_field, const Eigen::VectorXd& truth);

struct RmseRecord {
    std::string scenario;
    std::string variant;
    int n_e = 0;
    int experiment = 0;
    double rmse = 0.0;
    long steps = 0;  // model time steps simulated (counted once, not per member)
    double wall_s = 0.0;
    bool diverged = false;
};

struct ExperimentContext {
    const ScenarioSpec& spec;
    const SyntheticTruth& truth;
    const FieldSampler& init_sampler;  // ensemble statistics, factored once
};

/// Runs one synthetic experiment. Numerical divergence (solver failure or a
/// non-finite ensemble) marks the record diverged and reports the RMSE of
/// the last valid analysis; it never throws for that reason.
RmseRecord run_experiment(const ExperimentContext& ctx, const VariantConfig& variant,
                          int n_e, int experiment_index,
                          std::uint64_t experiment_seed);

struct ExperimentPlan {
    ScenarioSpec spec;
    std::vector<VariantConfig> variants;
    std::vector<int> ensemble_sizes;
    int n_experiments = 1;
    std::uint64_t truth_seed = 0;
    std::uint64_t base_experiment_seed = 20180828;
    bool paired = true;

    void validate() const;
    std::size_t n_tasks() const {
        return variants.size() * ensemble_sizes.size() * std::size_t(n_experiments);
    }
    std::uint64_t experiment_seed(const VariantConfig& variant, int n_e,
                                  int index) const;

    /// Stable hash of everything that determines the results.
    std::string hash() const;
};

struct RunOptions {
    int workers = 1;
    bool resume = false;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Executes the plan into out_dir (rmse.csv + manifest.json) and returns all
/// records in canonical order. Existing records are skipped when resuming.
std::vector<RmseRecord> run_plan(const ExperimentPlan& plan,
                                 const std::string& out_dir,
                                 const RunOptions& options);

// --- storage ---------------------------------------------------------------

inline constexpr const char* kRmseCsvHeader =
    "scenario,variant,n_e,experiment,rmse,steps,wall_s,diverged";

std::vector<RmseRecord> read_rmse_csv(const std::string& path);
void write_manifest(const ExperimentPlan& plan, const std::string& path);
std::string read_manifest_hash(const std::string& path);

} // namespace ekb
