#include "normal_score.hpp"

#include "normal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace ekb {

namespace {
constexpr double kClampP = 1e-12;  // CDF clamp for the forward map
}

std::shared_ptr<const Eigen::VectorXd> normal_score_quantiles(int n_e) {
    if (n_e < 2) throw InvalidArgument("normal_score_quantiles: need n_e >= 2");
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const Eigen::VectorXd>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n_e);
    if (it != cache.end()) return it->second;
    auto z = std::make_shared<Eigen::VectorXd>(n_e);
    for (int k = 0; k < n_e; ++k) (*z)[k] = norm_ppf((k + 0.5) / n_e);
    cache.emplace(n_e, z);
    return z;
}

NsSpread ns_spread_from_name(const std::string& name) {
    if (name == "range") return NsSpread::Range;
    if (name == "stddev") return NsSpread::StdDev;
    if (name == "gap") return NsSpread::NeighborGap;
    throw InvalidArgument("unknown normal-score spread '" + name + "'");
}

const char* ns_spread_name(NsSpread spread) {
    switch (spread) {
        case NsSpread::Range: return "range";
        case NsSpread::StdDev: return "stddev";
        case NsSpread::NeighborGap: return "gap";
    }
    return "?";
}

NormalScoreTable::NormalScoreTable(Eigen::VectorXd sorted_values,
                                   std::shared_ptr<const Eigen::VectorXd> scores,
                                   NsSpread spread)
    : x_(std::move(sorted_values)), z_(std::move(scores)) {
    if (x_.size() < 2 || x_.size() != z_->size())
        throw InvalidArgument("NormalScoreTable: need n_e >= 2 sorted values");
    const int n = int(x_.size());
    double s = 0.0;
    switch (spread) {
        case NsSpread::Range:
            s = x_[n - 1] - x_[0];
            break;
        case NsSpread::StdDev: {
            const double mean = x_.mean();
            s = std::sqrt((x_.array() - mean).square().sum() / (n - 1));
            break;
        }
        case NsSpread::NeighborGap:
            s = (x_[n - 1] - x_[0]) / (n - 1);
            break;
    }
    lo_ = x_[0] - 3.0 * s;
    hi_ = x_[n - 1] + 3.0 * s;
}

double NormalScoreTable::forward(double x) const {
    if (!std::isfinite(x)) throw InvalidArgument("normal score: non-finite value");
    const int n = size();
    double u;
    if (x <= lo_) {
        u = 0.0;
    } else if (x >= hi_) {
        u = 1.0;
    } else if (x <= x_[0]) {
        const double width = x_[0] - lo_;
        u = width == 0.0 ? 0.25 / n : (x - lo_) / width * (0.5 / n);
    } else if (x >= x_[n - 1]) {
        const double u_last = (n - 0.5) / n;
        const double width = hi_ - x_[n - 1];
        u = width == 0.0 ? 1.0 : u_last + (x - x_[n - 1]) / width * (1.0 - u_last);
    } else {
        const double* begin = x_.data();
        const int k = int(std::upper_bound(begin, begin + n, x) - begin) - 1;
        const double width = x_[k + 1] - x_[k];
        const double t = width == 0.0 ? 0.5 : (x - x_[k]) / width;
        const double u_k = (k + 0.5) / n;
        u = u_k + t / n;
    }
    return norm_ppf(std::clamp(u, kClampP, 1.0 - kClampP));
}

double NormalScoreTable::back(double z) const {
    if (std::isnan(z)) throw InvalidArgument("normal score: NaN score");
    const int n = size();
    const Eigen::VectorXd& zs = *z_;

    // Exact node hit: restores the original member value bit for bit.
    const double* zbegin = zs.data();
    const double* pos = std::lower_bound(zbegin, zbegin + n, z);
    if (pos != zbegin + n && *pos == z) return x_[int(pos - zbegin)];

    const double u = norm_cdf(z);
    if (u <= 0.0) return lo_;
    if (u >= 1.0) return hi_;
    const double un = u * n;
    if (un <= 0.5) return lo_ + (un / 0.5) * (x_[0] - lo_);
    if (un >= n - 0.5)
        return x_[n - 1] + ((un - (n - 0.5)) / 0.5) * (hi_ - x_[n - 1]);
    const int k = int(un - 0.5);
    const double t = un - 0.5 - k;
    return x_[k] + t * (x_[k + 1] - x_[k]);
}

std::pair<Eigen::VectorXd, NormalScoreTable>
normal_score_transform(const Eigen::VectorXd& values, NsSpread spread) {
    const int n = int(values.size());
    if (n < 2) throw InvalidArgument("normal_score_transform: need n_e >= 2");
    if (!values.allFinite())
        throw InvalidArgument("normal_score_transform: non-finite value");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });

    auto scores = normal_score_quantiles(n);
    Eigen::VectorXd sorted(n);
    Eigen::VectorXd transformed(n);
    for (int k = 0; k < n; ++k) {
        sorted[k] = values[order[k]];
        transformed[order[k]] = (*scores)[k];
    }
    return {std::move(transformed),
            NormalScoreTable(std::move(sorted), std::move(scores), spread)};
}

Eigen::VectorXd normal_score_back(const Eigen::VectorXd& values,
                                  const NormalScoreTable& table) {
    Eigen::VectorXd out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) out[i] = table.back(values[i]);
    return out;
}

} // namespace ekb
