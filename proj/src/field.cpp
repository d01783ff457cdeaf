#include "field.hpp"

#include "csv.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace ekb {

namespace {

void check_correlation_args(double d, double a) {
    if (!std::isfinite(d) || !std::isfinite(a) || d < 0.0 || a <= 0.0)
        throw InvalidArgument("correlation: need finite d >= 0 and a > 0");
}

} // namespace

const char* correlation_model_name(CorrelationModel model) {
    switch (model) {
        case CorrelationModel::Spherical: return "spherical";
        case CorrelationModel::SphericalPrinted: return "spherical_printed";
        case CorrelationModel::Gaussian: return "gaussian";
    }
    return "?";
}

CorrelationModel correlation_model_from_name(const std::string& name) {
    if (name == "spherical") return CorrelationModel::Spherical;
    if (name == "spherical_printed") return CorrelationModel::SphericalPrinted;
    if (name == "gaussian") return CorrelationModel::Gaussian;
    throw InvalidArgument("unknown correlation model '" + name + "'");
}

double spherical_correlation(double d, double a) {
    check_correlation_args(d, a);
    const double u = d / a;
    if (u >= 1.0) return 0.0;
    return 1.0 - u * (1.5 - 0.5 * u * u);
}

double spherical_correlation_printed(double d, double a) {
    check_correlation_args(d, a);
    const double u = d / a;
    if (u >= 1.0) return 0.0;
    return 1.0 - u * (1.5 - 0.5 * u);
}

double correlation(CorrelationModel model, double d, double a) {
    switch (model) {
        case CorrelationModel::Spherical: return spherical_correlation(d, a);
        case CorrelationModel::SphericalPrinted: return spherical_correlation_printed(d, a);
        case CorrelationModel::Gaussian:
            check_correlation_args(d, a);
            return std::exp(-3.0 * (d / a) * (d / a));
    }
    throw InvalidArgument("correlation: bad model");
}

void FieldStats::validate() const {
    if (!std::isfinite(mean) || !std::isfinite(stddev) || stddev < 0.0)
        throw InvalidArgument("FieldStats: mean must be finite, stddev >= 0");
    if (!(corr_length > 0.0) || !std::isfinite(corr_length))
        throw InvalidArgument("FieldStats: correlation length must be positive");
}

void LogPermField::validate() const {
    if (values.size() != grid.n_cells())
        throw InvalidArgument("LogPermField: value count does not match grid");
    if (!values.allFinite())
        throw InvalidArgument("LogPermField: non-finite value");
}

Eigen::MatrixXd build_covariance(const Grid2D& grid, const FieldStats& stats) {
    stats.validate();
    const int n = grid.n_cells();
    const double var = stats.stddev * stats.stddev;
    Eigen::MatrixXd cov(n, n);
    for (int l = 0; l < n; ++l) {
        cov(l, l) = var;
        for (int m = l + 1; m < n; ++m) {
            const double c =
                var == 0.0 ? 0.0
                           : var * correlation(stats.model, grid.distance(l, m),
                                               stats.corr_length);
            cov(l, m) = c;
            cov(m, l) = c;
        }
    }
    return cov;
}

FieldSampler::FieldSampler(const Grid2D& grid, const FieldStats& stats)
    : grid_(grid), stats_(stats) {
    stats_.validate();
    if (stats_.stddev == 0.0) return;

    Eigen::MatrixXd cov = build_covariance(grid_, stats_);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-10 * stats_.stddev * stats_.stddev;
        cov.diagonal().array() += jitter;
        llt.compute(cov);
        if (llt.info() != Eigen::Success)
            throw DegenerateCovariance(
                "covariance factorization failed even with diagonal jitter "
                "1e-10*stddev^2; the correlation model is not positive definite "
                "on this grid (larger jitter or a different model is needed)");
    }
    chol_ = llt.matrixL();
}

LogPermField FieldSampler::sample(RngStream& stream) const {
    const int n = grid_.n_cells();
    LogPermField field{grid_, Eigen::VectorXd::Constant(n, stats_.mean)};
    if (stats_.stddev == 0.0) return field;

    Eigen::VectorXd z(n);
    for (int l = 0; l < n; ++l) z[l] = stream.next_normal();
    field.values.noalias() += chol_.triangularView<Eigen::Lower>() * z;
    return field;
}

LogPermField sample_field(const Grid2D& grid, const FieldStats& stats,
                          std::uint64_t seed) {
    FieldSampler sampler(grid, stats);
    RngStream stream(seed, StreamPurpose::FieldSample, 0);
    return sampler.sample(stream);
}

void write_field_csv(const LogPermField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "cell,x,y,log10k\n";
    for (int l = 0; l < field.grid.n_cells(); ++l) {
        out << l << ',' << format_double(field.grid.center_x(l)) << ','
            << format_double(field.grid.center_y(l)) << ','
            << format_double(field.values[l]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {
constexpr char kFieldMagic[4] = {'E', 'K', 'B', 'F'};
}

void write_field_bin(const LogPermField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::uint32_t version = 1;
    out.write(kFieldMagic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::int32_t nx = field.grid.nx, ny = field.grid.ny;
    out.write(reinterpret_cast<const char*>(&nx), 4);
    out.write(reinterpret_cast<const char*>(&ny), 4);
    out.write(reinterpret_cast<const char*>(&field.grid.dx), 8);
    out.write(reinterpret_cast<const char*>(&field.grid.dy), 8);
    out.write(reinterpret_cast<const char*>(field.values.data()),
              std::streamsize(sizeof(double)) * field.values.size());
    if (!out) throw IoError("write failed for '" + path + "'");
}

LogPermField read_field_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    std::uint32_t version = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || std::memcmp(magic, kFieldMagic, 4) != 0 || version != 1)
        throw IoError("'" + path + "' is not a field dump");
    std::int32_t nx = 0, ny = 0;
    double dx = 0.0, dy = 0.0;
    in.read(reinterpret_cast<char*>(&nx), 4);
    in.read(reinterpret_cast<char*>(&ny), 4);
    in.read(reinterpret_cast<char*>(&dx), 8);
    in.read(reinterpret_cast<char*>(&dy), 8);
    LogPermField field{Grid2D(nx, ny, dx, dy), Eigen::VectorXd(nx * ny)};
    in.read(reinterpret_cast<char*>(field.values.data()),
            std::streamsize(sizeof(double)) * field.values.size());
    if (!in) throw IoError("truncated field dump '" + path + "'");
    return field;
}

} // namespace ekb
