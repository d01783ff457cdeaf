#pragma once

/// Rank-based normal-score transform of an ensemble marginal.
///
/// The forward transform sorts the marginal (ties kept in input order),
/// assigns rank quantiles (k + 0.5) / n_e and maps them through the inverse
/// standard-normal CDF. The back-transform interpolates linearly in CDF
/// space between the two nearest table nodes. Outside the table range, two
/// artificial support points at distance three times the range of the
/// original values carry cumulative probabilities 0 and 1; anything beyond
/// them is moved to the nearest support point.

#include "error.hpp"

#include <Eigen/Dense>

#include <memory>
#include <utility>
#include <vector>

namespace ekb {

/// Normal scores of the rank quantiles (k + 0.5) / n_e, cached per n_e and
/// shared between tables (thread-safe).
std::shared_ptr<const Eigen::VectorXd> normal_score_quantiles(int n_e);

/// What "three times the spread" means for the support-point distance.
/// Range reads it as max - min; StdDev as the sample standard deviation;
/// NeighborGap as the mean spacing (max - min) / (n_e - 1). Range follows
/// the construction most literally but lets extrapolation tails grow with
/// every analysis; NeighborGap keeps them at the scale of the empirical CDF
/// steps.
enum class NsSpread { Range, StdDev, NeighborGap };

NsSpread ns_spread_from_name(const std::string& name);
const char* ns_spread_name(NsSpread spread);

class NormalScoreTable {
public:
    /// Sorted marginal values paired with the shared quantile scores.
    NormalScoreTable(Eigen::VectorXd sorted_values,
                     std::shared_ptr<const Eigen::VectorXd> scores,
                     NsSpread spread = NsSpread::Range);

    int size() const { return int(x_.size()); }
    const Eigen::VectorXd& sorted_values() const { return x_; }
    const Eigen::VectorXd& scores() const { return *z_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }

    /// Original space -> score space; total (far-out values clamp to the
    /// scores of cumulative probabilities 1e-12 and 1 - 1e-12).
    double forward(double x) const;

    /// Score space -> original space; total and monotone. Table nodes map
    /// back to their original values exactly.
    double back(double z) const;

private:
    Eigen::VectorXd x_;
    std::shared_ptr<const Eigen::VectorXd> z_;
    double lo_ = 0.0, hi_ = 0.0;
};

/// Transform a marginal of n_e >= 2 finite values. Returns the scores in
/// original member order plus the invertible table.
std::pair<Eigen::VectorXd, NormalScoreTable>
normal_score_transform(const Eigen::VectorXd& values,
                       NsSpread spread = NsSpread::Range);

/// Elementwise back-transform through the paired table.
Eigen::VectorXd normal_score_back(const Eigen::VectorXd& values,
                                  const NormalScoreTable& table);

} // namespace ekb
