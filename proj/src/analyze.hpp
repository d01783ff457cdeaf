#pragma once

/// Report generation from rmse tables: mean tables, pairwise quotient and
/// probability matrices, significance thresholds, and subset-mean histogram
/// data. Every output file repeats the plan hash on a leading comment line.

#include "harness.hpp"
#include "stats.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ekb {

struct AnalyzeOptions {
    std::vector<int> nsyn_list = {1, 10, 100};
    int n_resamples = 10000;
    std::uint64_t resample_seed = 1;
    int histogram_bins = 50;
    bool force = false;  // accept tables with differing plan hashes
};

/// Reads one or more rmse tables (with their manifests when present),
/// validates pairing and writes the full report set into out_dir.
void analyze_tables(const std::vector<std::string>& table_paths,
                    const AnalyzeOptions& options, const std::string& out_dir);

/// Grouped, pairing-checked distributions (exposed for tests).
std::vector<RmseDistribution> collect_distributions(
    const std::vector<RmseRecord>& records, int n_e);

} // namespace ekb
