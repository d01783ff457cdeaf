#pragma once

/// The two experimental set-ups (tracer transport and injection well) and
/// the synthetic-truth pipeline: reference field, clean observations and
/// initial ensembles.

#include "enkf.hpp"
#include "field.hpp"
#include "solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ekb {

struct ScenarioSpec {
    std::string name;
    Grid2D grid;
    double sim_time = 0.0;  // s
    int n_steps = 0;
    FluidProps fluid;
    RockProps rock;
    BoundarySpec head_bc;
    double initial_head = 10.0;  // m
    bool with_transport = false;
    BoundarySpec conc_bc;
    double initial_conc = 0.0;  // mol/l
    double diffusion = 0.0;     // m^2/s
    std::vector<int> obs_cells;
    ObsKind obs_kind = ObsKind::Head;
    int obs_interval = 0;  // steps between assimilations
    int n_obs_times = 0;
    double noise_sigma = 0.0;  // units of the observed variable
    FieldStats reference_stats;
    FieldStats ensemble_stats;
    SolverSettings solver;
    std::uint64_t default_truth_seed = 0;

    double dt() const { return sim_time / n_steps; }
    StateLayout layout() const { return {grid.n_cells(), with_transport}; }
    ForwardConfig forward_config() const;
    MeasurementBatch batch_template() const;

    void validate() const;
};

/// The two set-ups with every constant pinned; name is "tracer" or "well".
ScenarioSpec build_scenario(const std::string& name);

/// Cell index of the observation point at physical coordinates (x, y):
/// the cell containing the point, floor(x / dx).
int observation_cell(const Grid2D& grid, double x, double y);

struct SyntheticTruth {
    LogPermField field;
    std::vector<MeasurementBatch> batches;  // one per scheduled time
};

/// Samples the reference field, runs the forward model once and extracts
/// clean observations at the scheduled times. Deterministic per truth_seed.
SyntheticTruth generate_truth(const ScenarioSpec& spec, std::uint64_t truth_seed);

/// n_e fields from the ensemble statistics, sub-seeded per member; dynamic
/// states start from the scenario initial conditions.
Ensemble initial_ensemble(const ScenarioSpec& spec, int n_e,
                          std::uint64_t experiment_seed);
Ensemble initial_ensemble(const ScenarioSpec& spec, const FieldSampler& sampler,
                          int n_e, std::uint64_t experiment_seed);

} // namespace ekb
