#pragma once

/// Augmented-state ensembles, the measurement model and the stochastic EnKF
/// analysis step.
///
/// A member column is laid out as [log10 K | head | concentration] with one
/// entry per grid cell in each block. The Kalman gain is held in factored
/// form, K = P_e H^T (H P_e H^T + R)^-1, built from ensemble anomalies so the
/// full state covariance is never materialized: with anomalies A,
/// P_e H^T = A (H A)^T / (n_e - 1) and H P_e H^T = (H A)(H A)^T / (n_e - 1).

#include "rng.hpp"
#include "solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <vector>

namespace ekb {

enum class ObsKind { Head, Concentration };

struct StateLayout {
    int n_cells = 0;
    bool with_concentration = false;

    int n_state() const { return n_cells * (with_concentration ? 3 : 2); }
    int n_param() const { return n_cells; }
    int param_offset() const { return 0; }
    int head_offset() const { return n_cells; }
    int conc_offset() const { return 2 * n_cells; }
    int n_dynamic() const { return n_state() - n_cells; }

    int offset(ObsKind kind) const {
        if (kind == ObsKind::Head) return head_offset();
        if (!with_concentration)
            throw InvalidArgument("layout has no concentration block");
        return conc_offset();
    }

    /// Grid cell that carries state-vector entry s (blocks are cell-aligned).
    int entry_cell(int s) const { return s % n_cells; }

    bool operator==(const StateLayout& o) const {
        return n_cells == o.n_cells && with_concentration == o.with_concentration;
    }
};

/// One realization: parameters plus dynamic states.
struct AugmentedState {
    Eigen::VectorXd params;  // log10 K
    DynamicState state;
};

struct Ensemble {
    StateLayout layout;
    Eigen::MatrixXd members;  // n_state() x n_e

    int n_members() const { return int(members.cols()); }

    AugmentedState member(int i) const;
    void set_member(int i, const AugmentedState& m);

    auto params() { return members.topRows(layout.n_param()); }
    auto params() const { return members.topRows(layout.n_param()); }

    /// Ensemble mean of the parameter block.
    Eigen::VectorXd param_mean() const { return params().rowwise().mean(); }

    void validate() const;
};

struct MeasurementBatch {
    std::vector<int> obs_cells;
    ObsKind kind = ObsKind::Head;
    Eigen::VectorXd values;     // observed values y
    Eigen::VectorXd noise_var;  // diagonal of R
    int time_index = 0;         // 1-based assimilation index
    int step = 0;               // model step the batch belongs to

    int n_obs() const { return int(obs_cells.size()); }
    void validate(const StateLayout& layout) const;
};

/// State-vector rows selected by H for this batch.
std::vector<int> observation_rows(const MeasurementBatch& batch,
                                  const StateLayout& layout);

/// H x: pure selection of the observed variable at the observed cells.
Eigen::VectorXd apply_H(const Eigen::VectorXd& member, const MeasurementBatch& batch,
                        const StateLayout& layout);
Eigen::MatrixXd apply_H(const Eigen::MatrixXd& members, const MeasurementBatch& batch,
                        const StateLayout& layout);

/// Columns d_i = y + eps_i with eps_i ~ N(0, R), drawn member by member.
Eigen::MatrixXd perturb_observations(const MeasurementBatch& batch, int n_e,
                                     RngStream& stream);

/// Factored Kalman gain. apply() computes K * rhs; apply_rows() restricts K
/// to a row range of the state vector (used by the dual scheme).
class GainRep {
public:
    GainRep(Eigen::MatrixXd pht, const Eigen::MatrixXd& innovation_cov);

    const Eigen::MatrixXd& pht() const { return pht_; }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& rhs) const {
        return pht_ * llt_.solve(rhs);
    }

    Eigen::MatrixXd apply_rows(int row_begin, int row_end,
                               const Eigen::MatrixXd& rhs) const {
        return pht_.middleRows(row_begin, row_end - row_begin) * llt_.solve(rhs);
    }

private:
    Eigen::MatrixXd pht_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Classical anomaly-based gain with the unbiased 1/(n_e - 1) estimator.
GainRep kalman_gain(const Ensemble& ensemble, const MeasurementBatch& batch);

/// x_i^a = x_i^f + K (d_i - H x_i^f); returns a new ensemble.
Ensemble analysis_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                         const Eigen::MatrixXd& perturbed, const GainRep& gain);

/// Checkpointing: binary column dump plus a JSON manifest at <path>.json.
void write_ensemble_bin(const Ensemble& ensemble, const std::string& path);
Ensemble read_ensemble_bin(const std::string& path);

} // namespace ekb
