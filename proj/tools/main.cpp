/// Command-line front end. Everything goes through the C API of the shared
/// library; exit codes are 0 (ok), 1 (runtime failure), 2 (config error).

#include <enkfbench.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace {

int status_to_exit(ekb_status status) {
    if (status == EKB_OK) return 0;
    std::fprintf(stderr, "error: %s\n", ekb_last_error());
    return status == EKB_ERROR_CONFIG ? 2 : 1;
}

void print_progress(size_t done, size_t total, void*) {
    if (total == 0) return;
    // Coarse progress line; overwritten in place.
    static size_t last_percent = SIZE_MAX;
    const size_t percent = 100 * done / total;
    if (percent != last_percent) {
        std::fprintf(stderr, "\r%zu/%zu experiments (%zu%%)", done, total, percent);
        if (done == total) std::fprintf(stderr, "\n");
        std::fflush(stderr);
        last_percent = percent;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"enkfbench - ensemble Kalman filter benchmark on 2D groundwater models"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int workers = 0;
    bool resume = false, quiet = false;
    auto* run = app.add_subcommand("run", "execute an experiment plan");
    run->add_option("--config", config_path, "run configuration file")->required();
    run->add_option("--workers", workers, "worker threads (default: config value)");
    run->add_flag("--resume", resume, "skip records already on disk");
    run->add_option("--out", out_dir, "output directory (default: config/env)");
    run->add_flag("--quiet", quiet, "suppress the progress line");

    std::vector<std::string> tables;
    std::vector<int> nsyn;
    std::string analyze_out;
    bool force = false;
    auto* analyze = app.add_subcommand("analyze", "build comparison reports from rmse tables");
    analyze->add_option("--table", tables, "rmse.csv path (repeatable)")->required();
    analyze->add_option("--nsyn", nsyn, "subset sizes (default 1,10,100)")->delimiter(',');
    analyze->add_option("--out", analyze_out, "report output directory")->required();
    analyze->add_flag("--force", force, "merge tables from different plans");

    std::string scenario = "tracer";
    std::uint64_t seed = 0;
    std::string forward_out;
    auto* forward = app.add_subcommand("forward", "dump a reference forward run");
    forward->add_option("--scenario", scenario, "tracer or well")->required();
    forward->add_option("--seed", seed, "reference-field seed (default: built-in)");
    forward->add_option("--out", forward_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        ekb_config* config = nullptr;
        ekb_status status = ekb_config_load(config_path.c_str(), &config);
        if (status != EKB_OK) return status_to_exit(status);
        status = ekb_run_with_progress(config, out_dir.empty() ? nullptr : out_dir.c_str(),
                                       workers, resume ? 1 : 0,
                                       quiet ? nullptr : &print_progress, nullptr);
        ekb_config_free(config);
        return status_to_exit(status);
    }

    if (analyze->parsed()) {
        std::vector<const char*> paths;
        for (const auto& t : tables) paths.push_back(t.c_str());
        const ekb_status status =
            ekb_analyze(paths.data(), paths.size(), nsyn.empty() ? nullptr : nsyn.data(),
                        nsyn.size(), analyze_out.c_str(), force ? 1 : 0);
        return status_to_exit(status);
    }

    const ekb_status status = ekb_forward(scenario.c_str(), seed, forward_out.c_str());
    return status_to_exit(status);
}
