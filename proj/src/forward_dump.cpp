#include "forward_dump.hpp"

#include "csv.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;

namespace ekb {

void dump_forward(const ScenarioSpec& spec, std::uint64_t truth_seed,
                  const std::string& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    LogPermField field;
    {
        FieldSampler sampler(spec.grid, spec.reference_stats);
        RngStream stream(truth_seed, StreamPurpose::TruthField, 0);
        field = sampler.sample(stream);
    }
    write_field_csv(field, (dir / "reference_field.csv").string());
    write_field_bin(field, (dir / "reference_field.bin").string());

    std::ofstream obs(dir / "observations.csv");
    if (!obs) throw IoError("cannot write observation table");
    obs << "time_index,step,obs_index,cell,value\n";

    std::ofstream snaps(dir / "snapshots.csv");
    if (!snaps) throw IoError("cannot write snapshots");
    snaps << "step,cell,head" << (spec.with_transport ? ",concentration" : "") << "\n";

    const int total = spec.obs_interval * spec.n_obs_times;
    std::set<int> snapshot_steps = {0, total / 4, total / 2, 3 * total / 4, total};
    auto dump_state = [&](int step, const DynamicState& state) {
        for (int l = 0; l < spec.grid.n_cells(); ++l) {
            snaps << step << ',' << l << ',' << format_double(state.head[l]);
            if (spec.with_transport)
                snaps << ',' << format_double(state.concentration[l]);
            snaps << '\n';
        }
    };

    ForwardModel model(spec.forward_config());
    DynamicState state = model.initial_state();
    if (snapshot_steps.count(0)) dump_state(0, state);
    for (int step = 1; step <= total; ++step) {
        model.advance(field, state, 1);
        if (snapshot_steps.count(step)) dump_state(step, state);
        if (step % spec.obs_interval == 0) {
            const int k = step / spec.obs_interval;
            const Eigen::VectorXd& source =
                spec.obs_kind == ObsKind::Head ? state.head : state.concentration;
            for (std::size_t m = 0; m < spec.obs_cells.size(); ++m)
                obs << k << ',' << step << ',' << m << ',' << spec.obs_cells[m] << ','
                    << format_double(source[spec.obs_cells[m]]) << '\n';
        }
    }
    if (!obs || !snaps) throw IoError("write failed in forward dump");
}

} // namespace ekb
