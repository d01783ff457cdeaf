#include "stats.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ekb {

double rmse_mean(const std::vector<double>& samples) {
    if (samples.empty()) throw InvalidArgument("rmse_mean: empty sample set");
    return std::accumulate(samples.begin(), samples.end(), 0.0) / double(samples.size());
}

namespace {

/// Partial Fisher-Yates: after the call, idx[0..n_syn) holds the subset.
void draw_subset(std::vector<int>& idx, int n_syn, RngStream& stream) {
    const int n = int(idx.size());
    for (int k = 0; k < n_syn; ++k) {
        const int j = k + int(stream.next_below(std::uint64_t(n - k)));
        std::swap(idx[k], idx[j]);
    }
}

} // namespace

OutperformanceResult outperformance_probability(const std::vector<double>& a,
                                                const std::vector<double>& b,
                                                int n_syn, int n_resamples,
                                                std::uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw InvalidArgument("outperformance: sample sets must be paired and non-empty");
    if (n_syn < 1 || std::size_t(n_syn) > a.size())
        throw InvalidArgument("outperformance: n_syn exceeds the available samples");
    if (n_resamples < 1) throw InvalidArgument("outperformance: need n_resamples >= 1");

    RngStream stream(seed, StreamPurpose::Resample, 0);
    std::vector<int> idx(a.size());
    std::iota(idx.begin(), idx.end(), 0);

    long wins_a = 0, wins_b = 0, ties = 0;
    for (int r = 0; r < n_resamples; ++r) {
        draw_subset(idx, n_syn, stream);
        double sum_a = 0.0, sum_b = 0.0;
        for (int k = 0; k < n_syn; ++k) {
            sum_a += a[idx[k]];
            sum_b += b[idx[k]];
        }
        if (sum_a < sum_b)
            ++wins_a;
        else if (sum_b < sum_a)
            ++wins_b;
        else
            ++ties;
    }
    OutperformanceResult res;
    res.p_a_lt_b = double(wins_a) / n_resamples;
    res.p_b_lt_a = double(wins_b) / n_resamples;
    res.tie_fraction = double(ties) / n_resamples;
    return res;
}

std::vector<double> subset_means(const std::vector<double>& samples, int n_syn,
                                 int n_resamples, std::uint64_t seed) {
    if (samples.empty()) throw InvalidArgument("subset_means: empty sample set");
    if (n_syn < 1 || std::size_t(n_syn) > samples.size())
        throw InvalidArgument("subset_means: n_syn exceeds the available samples");
    RngStream stream(seed, StreamPurpose::Resample, 0);
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> means(n_resamples);
    for (int r = 0; r < n_resamples; ++r) {
        draw_subset(idx, n_syn, stream);
        double sum = 0.0;
        for (int k = 0; k < n_syn; ++k) sum += samples[idx[k]];
        means[r] = sum / n_syn;
    }
    return means;
}

QuotientResult quotient_and_reldiff(const std::vector<double>& a,
                                    const std::vector<double>& b) {
    const double mean_a = rmse_mean(a);
    const double mean_b = rmse_mean(b);
    QuotientResult res;
    res.swapped = mean_b < mean_a;
    const double small = res.swapped ? mean_b : mean_a;
    const double large = res.swapped ? mean_a : mean_b;
    if (large <= 0.0)
        throw InvalidArgument("quotient_and_reldiff: means must be positive");
    res.q = small / large;
    res.d = 1.0 - res.q;
    return res;
}

std::vector<PairComparison> compare_all_pairs(const std::vector<RmseDistribution>& dists,
                                              int n_syn, int n_resamples,
                                              std::uint64_t seed) {
    std::vector<PairComparison> out;
    for (std::size_t x = 0; x < dists.size(); ++x) {
        for (std::size_t y = x + 1; y < dists.size(); ++y) {
            const RmseDistribution& da = dists[x];
            const RmseDistribution& db = dists[y];
            if (da.n_e != db.n_e)
                throw InvalidArgument("compare_all_pairs: mixed ensemble sizes");
            const QuotientResult qr = quotient_and_reldiff(da.samples, db.samples);
            const RmseDistribution& winner = qr.swapped ? db : da;
            const RmseDistribution& loser = qr.swapped ? da : db;
            const std::uint64_t pair_seed =
                mix_seed(seed, mix64(x * 8191 + y));
            const OutperformanceResult p = outperformance_probability(
                winner.samples, loser.samples, n_syn, n_resamples, pair_seed);
            PairComparison c;
            c.a = winner.variant;
            c.b = loser.variant;
            c.n_e = da.n_e;
            c.n_syn = n_syn;
            c.mean_a = rmse_mean(winner.samples);
            c.mean_b = rmse_mean(loser.samples);
            c.q = qr.q;
            c.d = qr.d;
            c.p = p.p_a_lt_b;
            c.tie_fraction = p.tie_fraction;
            out.push_back(std::move(c));
        }
    }
    return out;
}

SignificanceSummary significance_sets(const std::vector<PairComparison>& comparisons) {
    SignificanceSummary s;
    for (const auto& c : comparisons) {
        if (c.p > 0.95)
            s.significant.push_back(c);
        else
            s.insignificant.push_back(c);
    }
    for (const auto& c : s.significant)
        if (!s.d_min_plus || c.d < *s.d_min_plus) s.d_min_plus = c.d;
    for (const auto& c : s.insignificant)
        if (!s.d_max_minus || c.d > *s.d_max_minus) s.d_max_minus = c.d;

    if (s.d_min_plus && s.d_max_minus && *s.d_min_plus < *s.d_max_minus) {
        s.manual_threshold_needed = true;
        for (const auto& c : s.significant)
            if (c.d < *s.d_max_minus) s.offending.push_back(c);
        for (const auto& c : s.insignificant)
            if (c.d > *s.d_min_plus) s.offending.push_back(c);
    }
    return s;
}

} // namespace ekb
