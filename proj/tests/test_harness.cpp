#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csv.hpp"
#include "harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ekb;
namespace fs = std::filesystem;

namespace {

/// Tracer set-up shrunk to four steps and two assimilation times.
ScenarioSpec mini_tracer() {
    ScenarioSpec s = build_scenario("tracer");
    s.n_steps = 4;
    s.n_obs_times = 2;
    s.validate();
    return s;
}

ExperimentPlan mini_plan(const ScenarioSpec& spec) {
    ExperimentPlan plan;
    plan.spec = spec;
    plan.truth_seed = spec.default_truth_seed;
    VariantConfig classical;
    VariantConfig damped;
    damped.kind = VariantKind::Damped;
    damped.id = "damped";
    plan.variants = {classical, damped};
    plan.ensemble_sizes = {4, 6};
    plan.n_experiments = 3;
    return plan;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Drop the wall-clock column (the only timing-dependent field).
std::string strip_wall(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        const auto fields = split_csv_line(line);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == 6) continue;
            out += fields[i];
            out += i + 1 == fields.size() ? '\n' : ',';
        }
    }
    return out;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("compute_rmse hand values") {
    Eigen::VectorXd a(2), b(2);
    a << -12.0, -12.0;
    b << -12.0, -12.0;
    CHECK(compute_rmse(a, b) == 0.0);
    b.array() += 0.5;
    CHECK(compute_rmse(a, b) == doctest::Approx(0.5).epsilon(1e-15));
    b << -12.3, -12.4;
    CHECK(compute_rmse(a, b) == doctest::Approx(0.35355).epsilon(1e-4));
    Eigen::VectorXd c(3);
    CHECK_THROWS_AS(compute_rmse(a, c), InvalidArgument);
}

TEST_CASE("step counters follow the variant cost identities") {
    const ScenarioSpec spec = mini_tracer();
    const SyntheticTruth truth = generate_truth(spec, spec.default_truth_seed);
    const FieldSampler sampler(spec.grid, spec.ensemble_stats);
    const ExperimentContext ctx{spec, truth, sampler};

    VariantConfig classical;
    VariantConfig dual;
    dual.kind = VariantKind::Dual;
    dual.id = "dual";
    VariantConfig iterative;
    iterative.kind = VariantKind::Iterative;
    iterative.id = "iterative";

    const auto rc = run_experiment(ctx, classical, 4, 0, 77);
    const auto rd = run_experiment(ctx, dual, 4, 0, 77);
    const auto ri = run_experiment(ctx, iterative, 4, 0, 77);
    CHECK(rc.steps == spec.n_steps);
    CHECK(rd.steps == 2 * rc.steps);
    CHECK(ri.steps == rc.steps * (spec.n_obs_times + 1) / 2);
    CHECK_FALSE(rc.diverged);
}

TEST_CASE("perfect prior with vanishing noise yields zero rmse") {
    ScenarioSpec spec = mini_tracer();
    spec.reference_stats = {-12.0, 0.0, 50.0, CorrelationModel::Spherical};
    spec.ensemble_stats = {-12.0, 0.0, 50.0, CorrelationModel::Spherical};
    spec.noise_sigma = 1e-300;
    const SyntheticTruth truth = generate_truth(spec, 5);
    const FieldSampler sampler(spec.grid, spec.ensemble_stats);
    const ExperimentContext ctx{spec, truth, sampler};
    const auto rec = run_experiment(ctx, VariantConfig{}, 4, 0, 9);
    CHECK(rec.rmse == 0.0);
}

TEST_CASE("experiments are paired across variants") {
    const ScenarioSpec spec = mini_tracer();
    const SyntheticTruth truth = generate_truth(spec, spec.default_truth_seed);
    const FieldSampler sampler(spec.grid, spec.ensemble_stats);
    const ExperimentContext ctx{spec, truth, sampler};

    // With alpha = 1 the damped scheme IS the classical scheme, so paired
    // seeds must reproduce the classical rmse bit for bit.
    VariantConfig classical;
    VariantConfig undamped;
    undamped.kind = VariantKind::Damped;
    undamped.id = "damped";
    undamped.alpha = 1.0;
    for (int e = 0; e < 3; ++e) {
        const auto a = run_experiment(ctx, classical, 5, e, mix_seed(1, e));
        const auto b = run_experiment(ctx, undamped, 5, e, mix_seed(1, e));
        CHECK(a.rmse == b.rmse);
    }
}

TEST_CASE("unpaired mode decouples the seeds") {
    ExperimentPlan plan = mini_plan(mini_tracer());
    const auto paired_seed =
        plan.experiment_seed(plan.variants[0], 4, 1);
    CHECK(plan.experiment_seed(plan.variants[1], 4, 1) == paired_seed);
    plan.paired = false;
    CHECK(plan.experiment_seed(plan.variants[0], 4, 1) !=
          plan.experiment_seed(plan.variants[1], 4, 1));
}

TEST_CASE("run_plan writes the expected records and resumes idempotently") {
    TempDir dir("ekb_plan_test");
    ExperimentPlan plan = mini_plan(mini_tracer());
    RunOptions options;
    options.workers = 2;

    const auto records = run_plan(plan, dir.path.string(), options);
    CHECK(records.size() == plan.n_tasks());
    CHECK(records.size() == 2 * 2 * 3);

    // Canonical ordering: variant-major, then size, then experiment.
    CHECK(records[0].variant == "classical");
    CHECK(records[0].n_e == 4);
    CHECK(records[0].experiment == 0);
    CHECK(records.back().variant == "damped");
    CHECK(records.back().n_e == 6);
    CHECK(records.back().experiment == 2);

    const std::string csv = (dir.path / "rmse.csv").string();
    const std::string first = read_file(csv);

    // Same plan without resume refuses to clobber.
    CHECK_THROWS_AS(run_plan(plan, dir.path.string(), options), IoError);

    // Resuming a complete run recomputes nothing and leaves the file alone.
    options.resume = true;
    std::size_t progress_total = 0;
    options.progress = [&](std::size_t, std::size_t total) { progress_total = total; };
    const auto again = run_plan(plan, dir.path.string(), options);
    CHECK(read_file(csv) == first);
    CHECK(again.size() == records.size());
    CHECK(progress_total == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(again[i].rmse == records[i].rmse);

    // Truncate to the first data row; resume restores the identical file.
    {
        std::istringstream in(first);
        std::string header, row1;
        std::getline(in, header);
        std::getline(in, row1);
        std::ofstream out(csv, std::ios::trunc);
        out << header << '\n' << row1 << '\n';
    }
    (void)run_plan(plan, dir.path.string(), options);
    CHECK(strip_wall(read_file(csv)) == strip_wall(first));

    // A different plan cannot resume into this directory.
    ExperimentPlan other = plan;
    other.base_experiment_seed += 1;
    CHECK_THROWS_AS(run_plan(other, dir.path.string(), options), IoError);
}

TEST_CASE("worker count does not change the table") {
    TempDir dir1("ekb_workers1");
    TempDir dir2("ekb_workers4");
    ExperimentPlan plan = mini_plan(mini_tracer());
    RunOptions serial;
    serial.workers = 1;
    RunOptions parallel;
    parallel.workers = 4;
    (void)run_plan(plan, dir1.path.string(), serial);
    (void)run_plan(plan, dir2.path.string(), parallel);
    CHECK(strip_wall(read_file((dir1.path / "rmse.csv").string())) ==
          strip_wall(read_file((dir2.path / "rmse.csv").string())));
}

TEST_CASE("plan hash tracks everything that matters") {
    const ExperimentPlan plan = mini_plan(mini_tracer());
    ExperimentPlan other = plan;
    CHECK(plan.hash() == other.hash());
    other.truth_seed += 1;
    CHECK(plan.hash() != other.hash());
    other = plan;
    other.spec.noise_sigma *= 2.0;
    CHECK(plan.hash() != other.hash());
    other = plan;
    other.variants[1].alpha = 0.2;
    CHECK(plan.hash() != other.hash());
}

TEST_CASE("rmse csv round-trips through the reader") {
    TempDir dir("ekb_csv_roundtrip");
    ExperimentPlan plan = mini_plan(mini_tracer());
    plan.ensemble_sizes = {4};
    plan.n_experiments = 2;
    RunOptions options;
    const auto records = run_plan(plan, dir.path.string(), options);
    const auto parsed = read_rmse_csv((dir.path / "rmse.csv").string());
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].variant == records[i].variant);
        CHECK(parsed[i].rmse == records[i].rmse);  // exact round trip
        CHECK(parsed[i].steps == records[i].steps);
        CHECK(parsed[i].diverged == records[i].diverged);
    }
}
