#include "scenario.hpp"

#include <cmath>

namespace ekb {

namespace {

// Default reference-field seeds. Chosen once so that the fixed synthetic
// truth is a typical draw of the reference statistics; the tracer seed also
// places the initial ensemble-mean error near 0.62 log10 K.
constexpr std::uint64_t kTracerTruthSeed = 3;
constexpr std::uint64_t kWellTruthSeed = 4;

constexpr double kDay = 86400.0;

} // namespace

ForwardConfig ScenarioSpec::forward_config() const {
    ForwardConfig cfg;
    cfg.grid = grid;
    cfg.fluid = fluid;
    cfg.rock = rock;
    cfg.head_bc = head_bc;
    cfg.initial_head = initial_head;
    cfg.with_transport = with_transport;
    cfg.conc_bc = conc_bc;
    cfg.initial_conc = initial_conc;
    cfg.diffusion = diffusion;
    cfg.dt = dt();
    cfg.settings = solver;
    return cfg;
}

MeasurementBatch ScenarioSpec::batch_template() const {
    MeasurementBatch batch;
    batch.obs_cells = obs_cells;
    batch.kind = obs_kind;
    batch.values = Eigen::VectorXd::Zero(int(obs_cells.size()));
    batch.noise_var =
        Eigen::VectorXd::Constant(int(obs_cells.size()), noise_sigma * noise_sigma);
    return batch;
}

void ScenarioSpec::validate() const {
    fluid.validate();
    rock.validate();
    solver.validate();
    reference_stats.validate();
    ensemble_stats.validate();
    head_bc.validate(grid);
    if (with_transport) conc_bc.validate(grid);
    if (n_steps < 1 || !(sim_time > 0.0))
        throw InvalidArgument("ScenarioSpec: need sim_time > 0 and n_steps >= 1");
    if (obs_cells.empty()) throw InvalidArgument("ScenarioSpec: no observation cells");
    for (int c : obs_cells)
        if (!grid.contains(c))
            throw InvalidArgument("ScenarioSpec: observation cell outside grid");
    if (obs_interval < 1 || n_obs_times < 1 ||
        obs_interval * n_obs_times > n_steps)
        throw InvalidArgument(
            "ScenarioSpec: observation schedule must fit the step grid "
            "(obs_interval * n_obs_times <= n_steps)");
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma))
        throw InvalidArgument("ScenarioSpec: noise sigma must be positive");
    if (obs_kind == ObsKind::Concentration && !with_transport)
        throw InvalidArgument("ScenarioSpec: concentration observed without transport");
}

int observation_cell(const Grid2D& grid, double x, double y) {
    const int i = int(std::floor(x / grid.dx));
    const int j = int(std::floor(y / grid.dy));
    if (i < 0 || i >= grid.nx || j < 0 || j >= grid.ny)
        throw InvalidArgument("observation point outside the domain");
    return grid.cell_index(i, j);
}

ScenarioSpec build_scenario(const std::string& name) {
    ScenarioSpec s;
    s.name = name;
    s.fluid = FluidProps{1000.0, 1.0e-3, 9.81};
    s.rock = RockProps{0.10, 1e-5};
    s.solver = SolverSettings{1e-10, 1e-14, 500};

    if (name == "tracer") {
        s.grid = Grid2D(31, 31, 2.0, 2.0);
        s.sim_time = 1200.0 * kDay;
        s.n_steps = 200;
        s.head_bc.south = EdgeBC::dirichlet(11.0);
        s.head_bc.north = EdgeBC::dirichlet(10.0);
        s.initial_head = 10.0;
        s.with_transport = true;
        s.conc_bc.south = EdgeBC::dirichlet(80e-3);
        s.conc_bc.north = EdgeBC::dirichlet(60e-3);
        s.initial_conc = 60e-3;
        s.diffusion = 1.5e-9;
        s.obs_cells = {observation_cell(s.grid, 19.0, 31.0),
                       observation_cell(s.grid, 43.0, 31.0)};
        s.obs_kind = ObsKind::Concentration;
        s.obs_interval = 2;  // every 12 days
        s.n_obs_times = 100;
        s.noise_sigma = 7.1e-3;
        s.reference_stats = {-12.0, 0.5, 50.0, CorrelationModel::Spherical};
        s.ensemble_stats = {-12.5, 0.5, 50.0, CorrelationModel::Spherical};
        s.default_truth_seed = kTracerTruthSeed;
    } else if (name == "well") {
        s.grid = Grid2D(31, 31, 20.0, 20.0);
        s.sim_time = 18.0 * kDay;
        s.n_steps = 1200;
        s.head_bc.south = EdgeBC::dirichlet(10.0);
        s.head_bc.north = EdgeBC::dirichlet(10.0);
        s.head_bc.west = EdgeBC::dirichlet(10.0);
        s.head_bc.east = EdgeBC::dirichlet(10.0);
        s.head_bc.fixed_cells = {{observation_cell(s.grid, 310.0, 310.0), 11.0}};
        s.initial_head = 10.0;
        // 7x7 observer lattice at cell indices {3, 7, ..., 27} per axis,
        // excluding the well cell.
        const int well = observation_cell(s.grid, 310.0, 310.0);
        for (int j = 3; j <= 27; j += 4)
            for (int i = 3; i <= 27; i += 4) {
                const int cell = s.grid.cell_index(i, j);
                if (cell != well) s.obs_cells.push_back(cell);
            }
        s.obs_kind = ObsKind::Head;
        s.obs_interval = 20;  // every 7 h 12 min
        s.n_obs_times = 60;
        s.noise_sigma = 5e-2;
        s.reference_stats = {-12.0, 0.5, 60.0, CorrelationModel::Spherical};
        s.ensemble_stats = {-12.5, 0.5, 60.0, CorrelationModel::Spherical};
        s.default_truth_seed = kWellTruthSeed;
    } else {
        throw InvalidArgument("unknown scenario '" + name + "' (expected tracer or well)");
    }
    s.validate();
    return s;
}

SyntheticTruth generate_truth(const ScenarioSpec& spec, std::uint64_t truth_seed) {
    spec.validate();
    SyntheticTruth truth;
    {
        FieldSampler sampler(spec.grid, spec.reference_stats);
        RngStream stream(truth_seed, StreamPurpose::TruthField, 0);
        truth.field = sampler.sample(stream);
    }
    ForwardModel model(spec.forward_config());
    DynamicState state = model.initial_state();
    const StateLayout layout = spec.layout();
    truth.batches.reserve(spec.n_obs_times);
    for (int k = 1; k <= spec.n_obs_times; ++k) {
        model.advance(truth.field, state, spec.obs_interval);
        MeasurementBatch batch = spec.batch_template();
        batch.time_index = k;
        batch.step = k * spec.obs_interval;
        const Eigen::VectorXd& source =
            spec.obs_kind == ObsKind::Head ? state.head : state.concentration;
        for (int m = 0; m < batch.n_obs(); ++m)
            batch.values[m] = source[batch.obs_cells[m]];
        batch.validate(layout);
        truth.batches.push_back(std::move(batch));
    }
    return truth;
}

Ensemble initial_ensemble(const ScenarioSpec& spec, const FieldSampler& sampler,
                          int n_e, std::uint64_t experiment_seed) {
    if (n_e < 2) throw InvalidArgument("initial_ensemble: need n_e >= 2");
    const StateLayout layout = spec.layout();
    ForwardModel model(spec.forward_config());
    const DynamicState init = model.initial_state();

    Ensemble ens{layout, Eigen::MatrixXd(layout.n_state(), n_e)};
    for (int i = 0; i < n_e; ++i) {
        RngStream stream(experiment_seed, StreamPurpose::InitField, std::uint64_t(i));
        const LogPermField field = sampler.sample(stream);
        ens.members.col(i).head(layout.n_param()) = field.values;
        ens.members.col(i).segment(layout.head_offset(), layout.n_cells) = init.head;
        if (layout.with_concentration)
            ens.members.col(i).segment(layout.conc_offset(), layout.n_cells) =
                init.concentration;
    }
    return ens;
}

Ensemble initial_ensemble(const ScenarioSpec& spec, int n_e,
                          std::uint64_t experiment_seed) {
    FieldSampler sampler(spec.grid, spec.ensemble_stats);
    return initial_ensemble(spec, sampler, n_e, experiment_seed);
}

} // namespace ekb
