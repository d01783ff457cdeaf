#pragma once

/// Building blocks for the seven assimilation strategies: damping,
/// covariance localization, hybrid covariance, and the block-restricted
/// updates used by the dual scheme. The dual and iterative loop structures
/// live in the experiment runner; everything here is a pure function of the
/// forecast ensemble and one measurement batch.

#include "enkf.hpp"
#include "normal_score.hpp"

#include <string>

namespace ekb {

/// How the normal-score variant carries the measurement noise into score
/// space. JointTable pushes each perturbed value y + eps through the
/// forecast-observation table and takes R as the sample variance of the
/// results; ScoreNoise transforms the clean value and adds the normalized
/// perturbations (eps / sigma) directly in score space, where they have unit
/// variance.
enum class NsObsPolicy { JointTable, ScoreNoise };

NsObsPolicy ns_obs_policy_from_name(const std::string& name);
const char* ns_obs_policy_name(NsObsPolicy policy);

enum class VariantKind { Classical, Damped, Local, Hybrid, Dual, NormalScore, Iterative };

const char* variant_kind_name(VariantKind kind);
VariantKind variant_kind_from_name(const std::string& name);

/// Static background variances per variable kind, in each variable's units
/// squared. Defaults are the prior field variance and the measurement-noise
/// scales of the two set-ups.
struct StaticDiag {
    double param = 0.25;     // (log10 K)^2
    double head = 2.5e-3;    // (0.05 m)^2
    double conc = 5.041e-5;  // (7.1e-3 mol/l)^2
};

struct VariantConfig {
    VariantKind kind = VariantKind::Classical;
    std::string id = "classical";  // label used in result records
    double alpha = 0.1;            // damped: parameter-update damping
    double lambda = 150.0;         // local: taper length scale, m
    double beta = 0.5;             // hybrid: ensemble-covariance weight
    StaticDiag static_diag;        // hybrid: static background variances
    double noise_scale = 1.0;      // multiplies the observation noise sigma
    NsSpread ns_spread = NsSpread::NeighborGap;      // normal-score support spread
    NsObsPolicy ns_obs = NsObsPolicy::JointTable;    // normal-score noise handling

    void validate() const;
};

/// Compactly supported fifth-order piecewise-rational taper, with support
/// scale a = sqrt(10/3) * lambda; 1 at d = 0, monotone, 0 for d >= 2a.
double gaspari_cohn(double d, double lambda);

/// Taper matrix rho[s, m] = gaspari_cohn(dist(entry s, observation m)).
/// Parameter and state entries at a cell sit at that cell's center.
Eigen::MatrixXd build_taper(const Grid2D& grid, const StateLayout& layout,
                            const MeasurementBatch& batch, double lambda);

/// K_loc = [rho o (P_e H^T)] (H P_e H^T + R)^-1; the innovation covariance
/// stays untapered.
GainRep localized_gain(const Ensemble& ensemble, const MeasurementBatch& batch,
                       const Eigen::MatrixXd& taper);
GainRep localized_gain(const Ensemble& ensemble, const MeasurementBatch& batch,
                       const Grid2D& grid, double lambda);

/// Gain from P = beta P_e + (1 - beta) P_static with P_static diagonal per
/// variable kind.
GainRep hybrid_gain(const Ensemble& ensemble, const MeasurementBatch& batch,
                    double beta, const StaticDiag& static_diag);

/// Damped analysis step: the parameter increment is scaled by alpha, the
/// dynamic-state increment stays undamped.
Ensemble damped_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                       const Eigen::MatrixXd& perturbed, const GainRep& gain,
                       double alpha);

/// Dual stage one: only the parameter block is updated (parameter rows of K).
Ensemble parameter_only_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                               const Eigen::MatrixXd& perturbed, const GainRep& gain);

/// Dual stage two: only the dynamic-state block is updated.
Ensemble state_only_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                           const Eigen::MatrixXd& perturbed, const GainRep& gain);

} // namespace ekb
