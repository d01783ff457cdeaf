#include "analyze.hpp"

#include "csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace fs = std::filesystem;

namespace ekb {

namespace {

struct TableData {
    std::vector<RmseRecord> records;
    std::string scenario;
    std::string plan_hash;  // empty when no manifest was found
    std::set<int> sizes;
};

TableData load_tables(const std::vector<std::string>& paths, bool force) {
    if (paths.empty()) throw InvalidArgument("analyze: no tables given");
    TableData data;
    for (const auto& path : paths) {
        auto records = read_rmse_csv(path);
        const fs::path manifest = fs::path(path).parent_path() / "manifest.json";
        std::string hash;
        if (fs::exists(manifest)) hash = read_manifest_hash(manifest.string());
        if (!hash.empty()) {
            if (data.plan_hash.empty())
                data.plan_hash = hash;
            else if (data.plan_hash != hash && !force)
                throw IoError("analyze: tables come from different plans (hash " +
                              data.plan_hash + " vs " + hash + "); use force to merge");
        }
        for (auto& r : records) {
            if (data.scenario.empty())
                data.scenario = r.scenario;
            else if (data.scenario != r.scenario)
                throw IoError("analyze: tables mix scenarios '" + data.scenario +
                              "' and '" + r.scenario + "'");
            data.sizes.insert(r.n_e);
            data.records.push_back(std::move(r));
        }
    }
    if (data.records.empty()) throw IoError("analyze: tables contain no records");
    return data;
}

} // namespace

std::vector<RmseDistribution> collect_distributions(
    const std::vector<RmseRecord>& records, int n_e) {
    std::map<std::string, std::map<int, double>> by_variant;
    for (const auto& r : records)
        if (r.n_e == n_e) {
            auto [it, inserted] = by_variant[r.variant].emplace(r.experiment, r.rmse);
            if (!inserted)
                throw IoError("analyze: duplicate record (" + r.variant + ", " +
                              std::to_string(n_e) + ", " + std::to_string(r.experiment) +
                              ")");
        }
    if (by_variant.empty())
        throw IoError("analyze: no records for n_e = " + std::to_string(n_e));

    // Pairing check: every variant must hold experiments 0..max without gaps.
    int n_exp = 0;
    for (const auto& [variant, samples] : by_variant)
        if (!samples.empty())
            n_exp = std::max(n_exp, samples.rbegin()->first + 1);
    std::string missing;
    int n_missing = 0;
    for (const auto& [variant, samples] : by_variant)
        for (int i = 0; i < n_exp; ++i)
            if (!samples.count(i)) {
                ++n_missing;
                if (n_missing <= 20)
                    missing += "\n  (" + variant + ", " + std::to_string(n_e) + ", " +
                               std::to_string(i) + ")";
            }
    if (n_missing > 0)
        throw IoError("analyze: " + std::to_string(n_missing) +
                      " missing record(s); experiments must be paired across "
                      "variants:" +
                      missing + (n_missing > 20 ? "\n  ..." : ""));

    std::vector<RmseDistribution> dists;
    for (const auto& [variant, samples] : by_variant) {
        RmseDistribution d;
        d.variant = variant;
        d.n_e = n_e;
        d.samples.reserve(n_exp);
        for (int i = 0; i < n_exp; ++i) d.samples.push_back(samples.at(i));
        dists.push_back(std::move(d));
    }
    return dists;
}

namespace {

std::ofstream open_report(const fs::path& path, const std::string& plan_hash) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "# plan_hash=" << (plan_hash.empty() ? "unknown" : plan_hash) << '\n';
    return out;
}

void write_mean_table(const TableData& data,
                      const std::map<int, std::vector<RmseDistribution>>& by_size,
                      const fs::path& dir) {
    auto out = open_report(dir / "mean_rmse.csv", data.plan_hash);
    out << "scenario,variant,n_e,n_syn_total,mean_rmse,diverged_count\n";
    std::map<std::pair<std::string, int>, int> diverged;
    for (const auto& r : data.records)
        if (r.diverged) ++diverged[{r.variant, r.n_e}];
    for (const auto& [n_e, dists] : by_size)
        for (const auto& d : dists)
            out << data.scenario << ',' << d.variant << ',' << n_e << ','
                << d.samples.size() << ',' << format_double(rmse_mean(d.samples)) << ','
                << diverged[{d.variant, n_e}] << '\n';
}

/// Matrix layout from the figure convention: the entry in row v, column h is
/// mean(h) / mean(v).
void write_quotients(const TableData& data, int n_e,
                     const std::vector<RmseDistribution>& dists, const fs::path& dir) {
    auto out = open_report(dir / ("quotients_ne" + std::to_string(n_e) + ".csv"),
                           data.plan_hash);
    out << "variant";
    for (const auto& h : dists) out << ',' << h.variant;
    out << '\n';
    for (const auto& v : dists) {
        out << v.variant;
        const double mean_v = rmse_mean(v.samples);
        for (const auto& h : dists)
            out << ',' << format_double(rmse_mean(h.samples) / mean_v);
        out << '\n';
    }
}

void write_probabilities(const TableData& data, int n_e, int n_syn,
                         const std::vector<RmseDistribution>& dists,
                         const std::vector<PairComparison>& pairs,
                         const fs::path& dir) {
    std::map<std::pair<std::string, std::string>, double> p;
    for (const auto& c : pairs) {
        p[{c.a, c.b}] = c.p;
        p[{c.b, c.a}] = 1.0 - c.p - c.tie_fraction;
    }
    auto out = open_report(dir / ("probabilities_ne" + std::to_string(n_e) + "_nsyn" +
                                  std::to_string(n_syn) + ".csv"),
                           data.plan_hash);
    out << "variant";
    for (const auto& b : dists) out << ',' << b.variant;
    out << '\n';
    for (const auto& a : dists) {
        out << a.variant;
        for (const auto& b : dists) {
            out << ',';
            if (a.variant != b.variant) out << format_double(p.at({a.variant, b.variant}));
        }
        out << '\n';
    }
}

void write_histograms(const TableData& data, int n_e, int n_syn,
                      const std::vector<RmseDistribution>& dists,
                      const AnalyzeOptions& opt, const fs::path& dir) {
    std::map<std::string, std::vector<double>> means;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& d : dists) {
        auto m = subset_means(d.samples, n_syn, opt.n_resamples,
                              mix_seed(opt.resample_seed, fnv1a(d.variant)));
        for (double v : m) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        means[d.variant] = std::move(m);
    }
    if (!(hi > lo)) hi = lo + 1e-12;
    const int bins = std::max(1, opt.histogram_bins);
    const double width = (hi - lo) / bins;

    auto out = open_report(dir / ("subset_means_ne" + std::to_string(n_e) + "_nsyn" +
                                  std::to_string(n_syn) + ".csv"),
                           data.plan_hash);
    out << "variant,bin_lo,bin_hi,count\n";
    for (const auto& [variant, m] : means) {
        std::vector<int> counts(bins, 0);
        for (double v : m) {
            int k = int((v - lo) / width);
            k = std::clamp(k, 0, bins - 1);
            ++counts[k];
        }
        for (int k = 0; k < bins; ++k)
            out << variant << ',' << format_double(lo + k * width) << ','
                << format_double(lo + (k + 1) * width) << ',' << counts[k] << '\n';
    }
}

} // namespace

void analyze_tables(const std::vector<std::string>& table_paths,
                    const AnalyzeOptions& options, const std::string& out_dir) {
    const TableData data = load_tables(table_paths, options.force);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::map<int, std::vector<RmseDistribution>> by_size;
    for (int n_e : data.sizes) by_size[n_e] = collect_distributions(data.records, n_e);

    write_mean_table(data, by_size, dir);

    auto thresholds = open_report(dir / "thresholds.csv", data.plan_hash);
    thresholds << "scenario,n_e,n_syn,d_min_plus,d_max_minus,manual_threshold\n";
    auto manual = open_report(dir / "manual_pairs.csv", data.plan_hash);
    manual << "scenario,n_e,n_syn,significant,a,b,d,p\n";

    for (const auto& [n_e, dists] : by_size) {
        write_quotients(data, n_e, dists, dir);
        for (int n_syn : options.nsyn_list) {
            if (n_syn < 1 || std::size_t(n_syn) > dists.front().samples.size())
                throw InvalidArgument("analyze: n_syn " + std::to_string(n_syn) +
                                      " exceeds the " +
                                      std::to_string(dists.front().samples.size()) +
                                      " experiments available");
            std::vector<PairComparison> pairs;
            if (dists.size() > 1)
                pairs = compare_all_pairs(dists, n_syn, options.n_resamples,
                                          mix_seed(options.resample_seed, n_syn));
            write_probabilities(data, n_e, n_syn, dists, pairs, dir);
            write_histograms(data, n_e, n_syn, dists, options, dir);

            const SignificanceSummary sig = significance_sets(pairs);
            thresholds << data.scenario << ',' << n_e << ',' << n_syn << ','
                       << (sig.d_min_plus ? format_double(*sig.d_min_plus) : "") << ','
                       << (sig.d_max_minus ? format_double(*sig.d_max_minus) : "") << ','
                       << (sig.manual_threshold_needed ? 1 : 0) << '\n';
            for (const auto& c : sig.offending)
                manual << data.scenario << ',' << n_e << ',' << n_syn << ','
                       << (c.p > 0.95 ? 1 : 0) << ',' << c.a << ',' << c.b << ','
                       << format_double(c.d) << ',' << format_double(c.p) << '\n';
        }
    }

    nlohmann::json j;
    j["format"] = "enkfbench-analysis-v1";
    j["plan_hash"] = data.plan_hash.empty() ? "unknown" : data.plan_hash;
    j["scenario"] = data.scenario;
    j["nsyn"] = options.nsyn_list;
    j["n_resamples"] = options.n_resamples;
    j["resample_seed"] = options.resample_seed;
    std::ofstream mj(dir / "analysis_manifest.json");
    if (!mj) throw IoError("cannot write analysis manifest");
    mj << j.dump(2) << '\n';
}

} // namespace ekb
