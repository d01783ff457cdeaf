#include "variants.hpp"

#include <cmath>

namespace ekb {

const char* variant_kind_name(VariantKind kind) {
    switch (kind) {
        case VariantKind::Classical: return "classical";
        case VariantKind::Damped: return "damped";
        case VariantKind::Local: return "local";
        case VariantKind::Hybrid: return "hybrid";
        case VariantKind::Dual: return "dual";
        case VariantKind::NormalScore: return "normal_score";
        case VariantKind::Iterative: return "iterative";
    }
    return "?";
}

VariantKind variant_kind_from_name(const std::string& name) {
    for (VariantKind k : {VariantKind::Classical, VariantKind::Damped, VariantKind::Local,
                          VariantKind::Hybrid, VariantKind::Dual, VariantKind::NormalScore,
                          VariantKind::Iterative})
        if (name == variant_kind_name(k)) return k;
    throw InvalidArgument("unknown variant '" + name + "'");
}

NsObsPolicy ns_obs_policy_from_name(const std::string& name) {
    if (name == "joint") return NsObsPolicy::JointTable;
    if (name == "score") return NsObsPolicy::ScoreNoise;
    throw InvalidArgument("unknown normal-score noise policy '" + name + "'");
}

const char* ns_obs_policy_name(NsObsPolicy policy) {
    return policy == NsObsPolicy::JointTable ? "joint" : "score";
}

void VariantConfig::validate() const {
    if (id.empty()) throw InvalidArgument("VariantConfig: empty id");
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
              c == '-' || c == '='))
            throw InvalidArgument("VariantConfig: id contains unsupported character");
    if (!(noise_scale > 0.0) || !std::isfinite(noise_scale))
        throw InvalidArgument("VariantConfig: noise scale must be positive");
    switch (kind) {
        case VariantKind::Damped:
            if (!(alpha > 0.0 && alpha <= 1.0))
                throw InvalidArgument("damped: alpha must lie in (0, 1]");
            break;
        case VariantKind::Local:
            if (!(lambda > 0.0) || !std::isfinite(lambda))
                throw InvalidArgument("local: lambda must be positive");
            break;
        case VariantKind::Hybrid:
            if (!(beta >= 0.0 && beta <= 1.0))
                throw InvalidArgument("hybrid: beta must lie in [0, 1]");
            if (!(static_diag.param >= 0.0) || !(static_diag.head >= 0.0) ||
                !(static_diag.conc >= 0.0))
                throw InvalidArgument("hybrid: static variances must be >= 0");
            break;
        default:
            break;
    }
}

double gaspari_cohn(double d, double lambda) {
    if (!std::isfinite(d) || !std::isfinite(lambda) || d < 0.0 || lambda <= 0.0)
        throw InvalidArgument("gaspari_cohn: need finite d >= 0 and lambda > 0");
    const double a = std::sqrt(10.0 / 3.0) * lambda;
    const double u = d / a;
    if (u >= 2.0) return 0.0;
    if (u < 1.0)
        return 1.0 + u * u * (-5.0 / 3.0 + u * (5.0 / 8.0 + u * (0.5 - 0.25 * u)));
    return 4.0 - 2.0 / (3.0 * u) +
           u * (-5.0 + u * (5.0 / 3.0 + u * (5.0 / 8.0 + u * (-0.5 + u / 12.0))));
}

Eigen::MatrixXd build_taper(const Grid2D& grid, const StateLayout& layout,
                            const MeasurementBatch& batch, double lambda) {
    batch.validate(layout);
    if (layout.n_cells != grid.n_cells())
        throw InvalidArgument("build_taper: layout does not match grid");
    const int n_s = layout.n_state();
    const int n_m = batch.n_obs();

    // Distances repeat across the per-cell blocks, so compute one cell-to-
    // observation block and stack it.
    Eigen::MatrixXd cell_taper(layout.n_cells, n_m);
    for (int m = 0; m < n_m; ++m)
        for (int l = 0; l < layout.n_cells; ++l)
            cell_taper(l, m) =
                gaspari_cohn(grid.distance(l, batch.obs_cells[m]), lambda);

    Eigen::MatrixXd taper(n_s, n_m);
    for (int block = 0; block * layout.n_cells < n_s; ++block)
        taper.middleRows(block * layout.n_cells, layout.n_cells) = cell_taper;
    return taper;
}

GainRep localized_gain(const Ensemble& ensemble, const MeasurementBatch& batch,
                       const Eigen::MatrixXd& taper) {
    ensemble.validate();
    batch.validate(ensemble.layout);
    if (taper.rows() != ensemble.layout.n_state() || taper.cols() != batch.n_obs())
        throw InvalidArgument("localized_gain: taper shape mismatch");
    const double scale = 1.0 / (ensemble.n_members() - 1);

    Eigen::MatrixXd anomalies =
        ensemble.members.colwise() - ensemble.members.rowwise().mean();
    Eigen::MatrixXd h_anomalies = apply_H(anomalies, batch, ensemble.layout);

    Eigen::MatrixXd pht =
        (scale * (anomalies * h_anomalies.transpose())).cwiseProduct(taper);
    Eigen::MatrixXd innov = scale * (h_anomalies * h_anomalies.transpose());
    innov.diagonal() += batch.noise_var;
    return GainRep(std::move(pht), innov);
}

GainRep localized_gain(const Ensemble& ensemble, const MeasurementBatch& batch,
                       const Grid2D& grid, double lambda) {
    return localized_gain(ensemble, batch,
                          build_taper(grid, ensemble.layout, batch, lambda));
}

namespace {

double static_variance(const StaticDiag& sd, const StateLayout& layout, int row) {
    if (row < layout.head_offset()) return sd.param;
    if (!layout.with_concentration || row < layout.conc_offset()) return sd.head;
    return sd.conc;
}

} // namespace

GainRep hybrid_gain(const Ensemble& ensemble, const MeasurementBatch& batch,
                    double beta, const StaticDiag& static_diag) {
    ensemble.validate();
    batch.validate(ensemble.layout);
    if (!(beta >= 0.0 && beta <= 1.0))
        throw InvalidArgument("hybrid_gain: beta must lie in [0, 1]");
    const double scale = 1.0 / (ensemble.n_members() - 1);
    const auto rows = observation_rows(batch, ensemble.layout);

    Eigen::MatrixXd anomalies =
        ensemble.members.colwise() - ensemble.members.rowwise().mean();
    Eigen::MatrixXd h_anomalies = apply_H(anomalies, batch, ensemble.layout);

    // P_static is diagonal, so P_static H^T has a single nonzero per column.
    Eigen::MatrixXd pht = (beta * scale) * (anomalies * h_anomalies.transpose());
    for (int m = 0; m < batch.n_obs(); ++m)
        pht(rows[m], m) +=
            (1.0 - beta) * static_variance(static_diag, ensemble.layout, rows[m]);

    Eigen::MatrixXd innov = (beta * scale) * (h_anomalies * h_anomalies.transpose());
    for (int m1 = 0; m1 < batch.n_obs(); ++m1)
        for (int m2 = 0; m2 < batch.n_obs(); ++m2)
            if (rows[m1] == rows[m2])
                innov(m1, m2) +=
                    (1.0 - beta) * static_variance(static_diag, ensemble.layout, rows[m1]);
    innov.diagonal() += batch.noise_var;
    return GainRep(std::move(pht), innov);
}

Ensemble damped_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                       const Eigen::MatrixXd& perturbed, const GainRep& gain,
                       double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InvalidArgument("damped_update: alpha must lie in (0, 1]");
    Eigen::MatrixXd innovations =
        perturbed - apply_H(ensemble.members, batch, ensemble.layout);
    Eigen::MatrixXd increment = gain.apply(innovations);
    increment.topRows(ensemble.layout.n_param()) *= alpha;
    Ensemble out = ensemble;
    out.members += increment;
    return out;
}

Ensemble parameter_only_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                               const Eigen::MatrixXd& perturbed, const GainRep& gain) {
    Eigen::MatrixXd innovations =
        perturbed - apply_H(ensemble.members, batch, ensemble.layout);
    Ensemble out = ensemble;
    out.members.topRows(ensemble.layout.n_param()) +=
        gain.apply_rows(0, ensemble.layout.n_param(), innovations);
    return out;
}

Ensemble state_only_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                           const Eigen::MatrixXd& perturbed, const GainRep& gain) {
    Eigen::MatrixXd innovations =
        perturbed - apply_H(ensemble.members, batch, ensemble.layout);
    const int begin = ensemble.layout.n_param();
    const int end = ensemble.layout.n_state();
    Ensemble out = ensemble;
    out.members.middleRows(begin, end - begin) +=
        gain.apply_rows(begin, end, innovations);
    return out;
}

} // namespace ekb
