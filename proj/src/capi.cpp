#include "enkfbench.h"

#include "analyze.hpp"
#include "config.hpp"
#include "forward_dump.hpp"
#include "harness.hpp"
#include "variants.hpp"
#include "version.hpp"

#include <cstring>
#include <string>

struct ekb_config {
    ekb::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
ekb_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return EKB_OK;
    } catch (const ekb::ConfigError& e) {
        g_last_error = e.what();
        return EKB_ERROR_CONFIG;
    } catch (const ekb::InvalidArgument& e) {
        g_last_error = e.what();
        return EKB_ERROR_INVALID_ARGUMENT;
    } catch (const ekb::IoError& e) {
        g_last_error = e.what();
        return EKB_ERROR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return EKB_ERROR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return EKB_ERROR_RUNTIME;
    }
}

ekb_status require(bool ok, const char* msg) {
    if (ok) return EKB_OK;
    g_last_error = msg;
    return EKB_ERROR_INVALID_ARGUMENT;
}

} // namespace

extern "C" {

const char* ekb_version(void) { return ekb::kVersion; }

const char* ekb_last_error(void) { return g_last_error.c_str(); }

ekb_status ekb_config_load(const char* path, ekb_config** out) {
    if (ekb_status s = require(path && out, "null argument"); s != EKB_OK) return s;
    return guarded([&] { *out = new ekb_config{ekb::load_config(path)}; });
}

ekb_status ekb_config_parse(const char* text, ekb_config** out) {
    if (ekb_status s = require(text && out, "null argument"); s != EKB_OK) return s;
    return guarded([&] { *out = new ekb_config{ekb::parse_config(text)}; });
}

ekb_status ekb_config_text(const ekb_config* config, char** out) {
    if (ekb_status s = require(config && out, "null argument"); s != EKB_OK) return s;
    return guarded([&] {
        const std::string text = ekb::serialize_config(config->cfg);
        *out = new char[text.size() + 1];
        std::memcpy(*out, text.c_str(), text.size() + 1);
    });
}

void ekb_config_free(ekb_config* config) { delete config; }

void ekb_string_free(char* s) { delete[] s; }

ekb_status ekb_run_with_progress(const ekb_config* config, const char* out_dir,
                                 int workers, int resume, ekb_progress_fn progress,
                                 void* user) {
    if (ekb_status s = require(config != nullptr, "null config"); s != EKB_OK) return s;
    return guarded([&] {
        const ekb::ExperimentPlan plan = ekb::build_plan(config->cfg);
        ekb::RunOptions options;
        options.workers = workers > 0 ? workers : config->cfg.workers;
        options.resume = resume != 0;
        if (progress)
            options.progress = [progress, user](std::size_t done, std::size_t total) {
                progress(done, total, user);
            };
        const std::string dir =
            out_dir && *out_dir ? out_dir : ekb::resolve_output_dir(config->cfg);
        ekb::run_plan(plan, dir, options);
    });
}

ekb_status ekb_run(const ekb_config* config, const char* out_dir, int workers,
                   int resume) {
    return ekb_run_with_progress(config, out_dir, workers, resume, nullptr, nullptr);
}

ekb_status ekb_analyze(const char* const* table_paths, size_t n_tables, const int* nsyn,
                       size_t n_nsyn, const char* out_dir, int force) {
    if (ekb_status s = require(table_paths && n_tables > 0 && out_dir,
                               "need at least one table and an output directory");
        s != EKB_OK)
        return s;
    return guarded([&] {
        std::vector<std::string> paths(table_paths, table_paths + n_tables);
        ekb::AnalyzeOptions options;
        if (nsyn && n_nsyn > 0) options.nsyn_list.assign(nsyn, nsyn + n_nsyn);
        options.force = force != 0;
        ekb::analyze_tables(paths, options, out_dir);
    });
}

ekb_status ekb_forward(const char* scenario, uint64_t seed, const char* out_dir) {
    if (ekb_status s = require(scenario && out_dir, "null argument"); s != EKB_OK)
        return s;
    return guarded([&] {
        const ekb::ScenarioSpec spec = ekb::build_scenario(scenario);
        ekb::dump_forward(spec, seed ? seed : spec.default_truth_seed, out_dir);
    });
}

ekb_status ekb_spherical_correlation(double d, double a, double* out) {
    if (ekb_status s = require(out != nullptr, "null output"); s != EKB_OK) return s;
    return guarded([&] { *out = ekb::spherical_correlation(d, a); });
}

ekb_status ekb_gaspari_cohn(double d, double lambda, double* out) {
    if (ekb_status s = require(out != nullptr, "null output"); s != EKB_OK) return s;
    return guarded([&] { *out = ekb::gaspari_cohn(d, lambda); });
}

ekb_status ekb_rmse(const double* a, const double* b, size_t n, double* out) {
    if (ekb_status s = require(a && b && out && n > 0, "null or empty input");
        s != EKB_OK)
        return s;
    return guarded([&] {
        const Eigen::Map<const Eigen::VectorXd> va(a, n), vb(b, n);
        *out = ekb::compute_rmse(va, vb);
    });
}

} // extern "C"
