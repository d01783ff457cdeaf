#include "enkf.hpp"

#include "version.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace ekb {

AugmentedState Ensemble::member(int i) const {
    AugmentedState m;
    m.params = members.col(i).head(layout.n_param());
    m.state.head = members.col(i).segment(layout.head_offset(), layout.n_cells);
    if (layout.with_concentration)
        m.state.concentration = members.col(i).segment(layout.conc_offset(), layout.n_cells);
    return m;
}

void Ensemble::set_member(int i, const AugmentedState& m) {
    members.col(i).head(layout.n_param()) = m.params;
    members.col(i).segment(layout.head_offset(), layout.n_cells) = m.state.head;
    if (layout.with_concentration)
        members.col(i).segment(layout.conc_offset(), layout.n_cells) = m.state.concentration;
}

void Ensemble::validate() const {
    if (n_members() < 2)
        throw InvalidArgument("Ensemble: need at least two members");
    if (members.rows() != layout.n_state())
        throw InvalidArgument("Ensemble: member length does not match layout");
}

void MeasurementBatch::validate(const StateLayout& layout) const {
    if (obs_cells.empty())
        throw InvalidArgument("MeasurementBatch: no observations");
    if (values.size() != n_obs() || noise_var.size() != n_obs())
        throw InvalidArgument("MeasurementBatch: value/noise lengths disagree");
    for (int c : obs_cells)
        if (c < 0 || c >= layout.n_cells)
            throw InvalidArgument("MeasurementBatch: observed cell outside grid");
    for (int m = 0; m < n_obs(); ++m)
        if (!(noise_var[m] >= 0.0) || !std::isfinite(noise_var[m]))
            throw InvalidArgument("MeasurementBatch: noise variance must be >= 0");
    (void)layout.offset(kind);  // rejects unsupported variable kinds
}

std::vector<int> observation_rows(const MeasurementBatch& batch,
                                  const StateLayout& layout) {
    const int off = layout.offset(batch.kind);
    std::vector<int> rows(batch.obs_cells.size());
    for (std::size_t m = 0; m < batch.obs_cells.size(); ++m)
        rows[m] = off + batch.obs_cells[m];
    return rows;
}

Eigen::VectorXd apply_H(const Eigen::VectorXd& member, const MeasurementBatch& batch,
                        const StateLayout& layout) {
    batch.validate(layout);
    if (member.size() != layout.n_state())
        throw InvalidArgument("apply_H: member length does not match layout");
    const auto rows = observation_rows(batch, layout);
    Eigen::VectorXd out(batch.n_obs());
    for (int m = 0; m < batch.n_obs(); ++m) out[m] = member[rows[m]];
    return out;
}

Eigen::MatrixXd apply_H(const Eigen::MatrixXd& members, const MeasurementBatch& batch,
                        const StateLayout& layout) {
    batch.validate(layout);
    if (members.rows() != layout.n_state())
        throw InvalidArgument("apply_H: member length does not match layout");
    const auto rows = observation_rows(batch, layout);
    Eigen::MatrixXd out(batch.n_obs(), members.cols());
    for (int m = 0; m < batch.n_obs(); ++m) out.row(m) = members.row(rows[m]);
    return out;
}

Eigen::MatrixXd perturb_observations(const MeasurementBatch& batch, int n_e,
                                     RngStream& stream) {
    if (n_e < 1) throw InvalidArgument("perturb_observations: need n_e >= 1");
    const int n_m = batch.n_obs();
    Eigen::VectorXd sigma = batch.noise_var.cwiseSqrt();
    Eigen::MatrixXd d(n_m, n_e);
    for (int i = 0; i < n_e; ++i)
        for (int m = 0; m < n_m; ++m)
            d(m, i) = batch.values[m] + sigma[m] * stream.next_normal();
    return d;
}

GainRep::GainRep(Eigen::MatrixXd pht, const Eigen::MatrixXd& innovation_cov)
    : pht_(std::move(pht)), llt_(innovation_cov) {
    if (llt_.info() != Eigen::Success)
        throw DegenerateCovariance(
            "innovation covariance H P H^T + R is singular (degenerate R)");
}

GainRep kalman_gain(const Ensemble& ensemble, const MeasurementBatch& batch) {
    ensemble.validate();
    batch.validate(ensemble.layout);
    const int n_e = ensemble.n_members();
    const double scale = 1.0 / (n_e - 1);

    Eigen::MatrixXd anomalies =
        ensemble.members.colwise() - ensemble.members.rowwise().mean();
    Eigen::MatrixXd h_anomalies = apply_H(anomalies, batch, ensemble.layout);

    Eigen::MatrixXd pht = scale * (anomalies * h_anomalies.transpose());
    Eigen::MatrixXd innov = scale * (h_anomalies * h_anomalies.transpose());
    innov.diagonal() += batch.noise_var;
    return GainRep(std::move(pht), innov);
}

Ensemble analysis_update(const Ensemble& ensemble, const MeasurementBatch& batch,
                         const Eigen::MatrixXd& perturbed, const GainRep& gain) {
    ensemble.validate();
    batch.validate(ensemble.layout);
    if (perturbed.rows() != batch.n_obs() || perturbed.cols() != ensemble.n_members())
        throw InvalidArgument("analysis_update: perturbed observation shape mismatch");

    Eigen::MatrixXd innovations =
        perturbed - apply_H(ensemble.members, batch, ensemble.layout);
    Ensemble out = ensemble;
    out.members.noalias() += gain.apply(innovations);
    return out;
}

namespace {
constexpr char kEnsembleMagic[4] = {'E', 'K', 'B', 'E'};
}

void write_ensemble_bin(const Ensemble& ensemble, const std::string& path) {
    ensemble.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::uint32_t version = 1;
    const std::int32_t n_cells = ensemble.layout.n_cells;
    const std::uint8_t with_conc = ensemble.layout.with_concentration ? 1 : 0;
    const std::int32_t n_e = ensemble.n_members();
    out.write(kEnsembleMagic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&n_cells), 4);
    out.write(reinterpret_cast<const char*>(&with_conc), 1);
    out.write(reinterpret_cast<const char*>(&n_e), 4);
    out.write(reinterpret_cast<const char*>(ensemble.members.data()),
              std::streamsize(sizeof(double)) * ensemble.members.size());
    if (!out) throw IoError("write failed for '" + path + "'");

    nlohmann::json j;
    j["format"] = "enkfbench-ensemble-v1";
    j["software_version"] = kVersion;
    j["n_cells"] = n_cells;
    j["with_concentration"] = bool(with_conc);
    j["n_members"] = n_e;
    std::ofstream manifest(path + ".json");
    if (!manifest) throw IoError("cannot open '" + path + ".json' for writing");
    manifest << j.dump(2) << '\n';
}

Ensemble read_ensemble_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    std::uint32_t version = 0;
    std::int32_t n_cells = 0, n_e = 0;
    std::uint8_t with_conc = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || std::memcmp(magic, kEnsembleMagic, 4) != 0 || version != 1)
        throw IoError("'" + path + "' is not an ensemble dump");
    in.read(reinterpret_cast<char*>(&n_cells), 4);
    in.read(reinterpret_cast<char*>(&with_conc), 1);
    in.read(reinterpret_cast<char*>(&n_e), 4);
    if (!in || n_cells < 1 || n_e < 2)
        throw IoError("corrupt ensemble header in '" + path + "'");
    Ensemble ens{StateLayout{n_cells, with_conc != 0},
                 Eigen::MatrixXd(std::int64_t(n_cells) * (with_conc ? 3 : 2), n_e)};
    in.read(reinterpret_cast<char*>(ens.members.data()),
            std::streamsize(sizeof(double)) * ens.members.size());
    if (!in) throw IoError("truncated ensemble dump '" + path + "'");
    return ens;
}

} // namespace ekb
