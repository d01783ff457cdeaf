#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "config.hpp"

#include <cstdlib>

using namespace ekb;

TEST_CASE("an empty config selects the full benchmark set-up") {
    const RunConfig c = parse_config("");
    CHECK(c.scenario == "tracer");
    CHECK(c.variants.size() == 7);
    CHECK(c.ensemble_sizes == std::vector<int>{50, 70, 100, 250, 500, 1000, 2000});
    CHECK(c.n_experiments == 1000);
    CHECK(c.paired);
    CHECK(c.alpha == 0.1);
    CHECK(c.lambda == 150.0);
    CHECK(c.beta == 0.5);

    const ExperimentPlan plan = build_plan(c);
    CHECK(plan.spec.name == "tracer");
    CHECK(plan.truth_seed == plan.spec.default_truth_seed);
    CHECK(plan.variants.size() == 7);
    CHECK(plan.n_tasks() == 7 * 7 * 1000);
}

TEST_CASE("a minimal config narrows the plan") {
    const RunConfig c = parse_config(
        "# comment line\n"
        "[plan]\n"
        "scenario = tracer\n"
        "variants = classical\n"
        "ensemble_sizes = 50\n"
        "n_experiments = 3\n");
    const ExperimentPlan plan = build_plan(c);
    CHECK(plan.n_tasks() == 3);
    CHECK(plan.variants[0].id == "classical");
}

TEST_CASE("unknown keys and sections are rejected with line numbers") {
    try {
        parse_config("[plan]\nscenario = tracer\nbogus_key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line_number == 3);
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[nonsense]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[plan]\nn_experiments = many\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[plan]\npaired = sometimes\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[plan]\nscenario = lake\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
}

TEST_CASE("serialization is a fixed point of parsing") {
    const std::string text =
        "[plan]\n"
        "scenario = well\n"
        "variants = classical,local\n"
        "ensemble_sizes = 50,100\n"
        "n_experiments = 12\n"
        "truth_seed = 9\n"
        "paired = false\n"
        "[scenario]\n"
        "noise_scale = 2\n"
        "n_steps = 40\n"
        "obs_interval = 20\n"
        "n_obs_times = 2\n"
        "[variant.local]\n"
        "lambda = 99\n"
        "[run]\n"
        "workers = 3\n";
    const RunConfig c1 = parse_config(text);
    const std::string s1 = serialize_config(c1);
    const RunConfig c2 = parse_config(s1);
    CHECK(serialize_config(c2) == s1);
    CHECK(c2.lambda == 99.0);
    CHECK(c2.workers == 3);
    CHECK(c2.overrides.noise_scale == 2.0);
    CHECK_FALSE(c2.paired);
}

TEST_CASE("scenario overrides reach the spec") {
    const RunConfig c = parse_config(
        "[scenario]\n"
        "n_steps = 20\n"
        "n_obs_times = 10\n"
        "noise_sigma = 0.002\n"
        "ens_mean = -12.25\n"
        "specific_storage = 2e-5\n"
        "correlation_model = spherical_printed\n"
        "obs_cells = 5:5,10:10\n");
    const ScenarioSpec spec = resolve_scenario(c);
    CHECK(spec.n_steps == 20);
    CHECK(spec.n_obs_times == 10);
    CHECK(spec.noise_sigma == 0.002);
    CHECK(spec.ensemble_stats.mean == -12.25);
    CHECK(spec.rock.specific_storage == 2e-5);
    CHECK(spec.reference_stats.model == CorrelationModel::SphericalPrinted);
    REQUIRE(spec.obs_cells.size() == 2);
    CHECK(spec.obs_cells[0] == spec.grid.cell_index(5, 5));

    // Inconsistent schedules are caught at resolve time.
    CHECK_THROWS_AS(resolve_scenario(parse_config("[scenario]\nn_steps = 5\n")),
                    ConfigError);
    // Concentration boundary overrides need the tracer physics.
    CHECK_THROWS_AS(resolve_scenario(parse_config(
                        "[plan]\nscenario = well\n[scenario]\nbc_conc_south = 0.07\n")),
                    ConfigError);
}

TEST_CASE("noise scale multiplies the scenario sigma") {
    const RunConfig c = parse_config("[scenario]\nnoise_scale = 0.5\n");
    CHECK(resolve_scenario(c).noise_sigma == doctest::Approx(7.1e-3 * 0.5));
}

TEST_CASE("sweeps expand the variant list") {
    const RunConfig c = parse_config(
        "[plan]\n"
        "variants = classical,local,hybrid\n"
        "[sweep]\n"
        "lambda = 25,150\n"
        "beta = 0.1,0.5,0.9\n");
    const ExperimentPlan plan = build_plan(c);
    REQUIRE(plan.variants.size() == 1 + 2 + 3);
    CHECK(plan.variants[1].id == "local_lambda25");
    CHECK(plan.variants[1].lambda == 25.0);
    CHECK(plan.variants[2].id == "local_lambda150");
    CHECK(plan.variants[3].id == "hybrid_beta0.1");
    CHECK(plan.variants[3].beta == 0.1);

    const RunConfig n = parse_config(
        "[plan]\n"
        "variants = classical\n"
        "[sweep]\n"
        "noise_scale = 0.2,1,5\n");
    const ExperimentPlan noise_plan = build_plan(n);
    REQUIRE(noise_plan.variants.size() == 3);
    CHECK(noise_plan.variants[0].id == "classical_ns0.2");
    CHECK(noise_plan.variants[0].noise_scale == 0.2);
    CHECK(noise_plan.variants[2].noise_scale == 5.0);
}

TEST_CASE("output directory resolution honors the environment") {
    RunConfig c;
    c.output_dir = "explicit";
    CHECK(resolve_output_dir(c) == "explicit");
    c.output_dir.clear();
    setenv("ENKFBENCH_OUT", "/tmp/ekb_env_out", 1);
    CHECK(resolve_output_dir(c) == "/tmp/ekb_env_out");
    unsetenv("ENKFBENCH_OUT");
    CHECK(resolve_output_dir(c) == "enkfbench_out");
}

TEST_CASE("normal-score knobs parse") {
    const RunConfig c = parse_config(
        "[variant.normal_score]\n"
        "spread = range\n"
        "noise = score\n");
    const ExperimentPlan plan = build_plan(c);
    for (const auto& v : plan.variants)
        if (v.kind == VariantKind::NormalScore) {
            CHECK(v.ns_spread == NsSpread::Range);
            CHECK(v.ns_obs == NsObsPolicy::ScoreNoise);
        }
    CHECK_THROWS_AS(parse_config("[variant.normal_score]\nspread = huge\n"), ConfigError);
}
