#pragma once

/// RMSE comparison machinery: means, subset-resampling outperformance
/// probabilities, quotients / relative differences, and significance sets
/// with their extreme values.

#include "rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ekb {

struct RmseDistribution {
    std::string variant;
    int n_e = 0;
    std::vector<double> samples;  // index-aligned by experiment
};

double rmse_mean(const std::vector<double>& samples);

struct OutperformanceResult {
    double p_a_lt_b = 0.0;
    double p_b_lt_a = 0.0;
    double tie_fraction = 0.0;  // p_a + p_b + ties == 1 exactly
};

/// Draws n_resamples index subsets of size n_syn without replacement; the
/// same subset indexes both sample sets (paired). Returns the fraction of
/// subsets on which mean(a) < mean(b); exact ties count to neither side.
OutperformanceResult outperformance_probability(const std::vector<double>& a,
                                                const std::vector<double>& b,
                                                int n_syn, int n_resamples,
                                                std::uint64_t seed);

/// Subset means themselves (one per resample), for distribution plots.
std::vector<double> subset_means(const std::vector<double>& samples, int n_syn,
                                 int n_resamples, std::uint64_t seed);

/// Orders the pair so the first mean is the smaller one;
/// q = mean_small / mean_large <= 1 and d = 1 - q.
struct QuotientResult {
    double q = 1.0;
    double d = 0.0;
    bool swapped = false;  // true when b had the smaller mean
};
QuotientResult quotient_and_reldiff(const std::vector<double>& a,
                                    const std::vector<double>& b);

/// One variant pair at a given n_syn; "a" always names the method with the
/// smaller full-batch mean.
struct PairComparison {
    std::string a, b;
    int n_e = 0;
    int n_syn = 0;
    double mean_a = 0.0, mean_b = 0.0;
    double q = 1.0, d = 0.0;
    double p = 0.0;  // p^{a<b} over subsets
    double tie_fraction = 0.0;
};

struct SignificanceSummary {
    std::vector<PairComparison> significant;    // p > 0.95
    std::vector<PairComparison> insignificant;  // p <= 0.95
    std::optional<double> d_min_plus;
    std::optional<double> d_max_minus;
    /// Set when d_min_plus < d_max_minus: the ordering anomaly the paper
    /// resolves by inspecting the distributions; the offending pairs are
    /// reported, the threshold is left to the caller.
    bool manual_threshold_needed = false;
    std::vector<PairComparison> offending;
};

SignificanceSummary significance_sets(const std::vector<PairComparison>& comparisons);

/// All unordered pairs of distributions at one ensemble size, compared at
/// one n_syn value.
std::vector<PairComparison> compare_all_pairs(
    const std::vector<RmseDistribution>& dists, int n_syn, int n_resamples,
    std::uint64_t seed);

} // namespace ekb
