#pragma once

/// Geostatistical log-permeability fields.
///
/// Fields are MultiGaussian with an isotropic correlation model between cell
/// centers (Euclidean distance). Sampling uses an exact dense Cholesky factor
/// of the cell-center covariance, so every draw follows the target law
/// without sequential-simulation approximations.

#include "grid.hpp"
#include "rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace ekb {

enum class CorrelationModel {
    Spherical,          // 1 - 1.5 u + 0.5 u^3 for u = d/a < 1, else 0
    SphericalPrinted,   // quadratic bracket variant: 1 - 1.5 u + 0.5 u^2, else 0
    Gaussian,           // exp(-3 u^2), practical range a
};

const char* correlation_model_name(CorrelationModel model);
CorrelationModel correlation_model_from_name(const std::string& name);

/// Canonical spherical correlation, zero at and beyond the range a.
double spherical_correlation(double d, double a);

/// Quadratic-bracket spherical variant, kept behind a config switch for
/// sensitivity checks. Also zero at and beyond a.
double spherical_correlation_printed(double d, double a);

double correlation(CorrelationModel model, double d, double a);

struct FieldStats {
    double mean = 0.0;         // log10(K [m^2])
    double stddev = 0.0;       // log10(K [m^2])
    double corr_length = 1.0;  // m
    CorrelationModel model = CorrelationModel::Spherical;

    void validate() const;
};

struct LogPermField {
    Grid2D grid;
    Eigen::VectorXd values;  // log10(K [m^2]), one entry per cell

    void validate() const;
};

/// Dense covariance between all cell-center pairs: stddev^2 * rho(dist, a).
Eigen::MatrixXd build_covariance(const Grid2D& grid, const FieldStats& stats);

/// Holds a lower-triangular factor of the covariance so that many fields can
/// be drawn from one factorization. A diagonal jitter of 1e-10 * stddev^2 is
/// applied if the plain factorization fails.
class FieldSampler {
public:
    FieldSampler(const Grid2D& grid, const FieldStats& stats);

    LogPermField sample(RngStream& stream) const;

    const Grid2D& grid() const { return grid_; }
    const FieldStats& stats() const { return stats_; }

private:
    Grid2D grid_;
    FieldStats stats_;
    Eigen::MatrixXd chol_;  // empty when stddev == 0
};

/// One-shot convenience wrapper around FieldSampler; deterministic per seed.
LogPermField sample_field(const Grid2D& grid, const FieldStats& stats,
                          std::uint64_t seed);

void write_field_csv(const LogPermField& field, const std::string& path);
void write_field_bin(const LogPermField& field, const std::string& path);
LogPermField read_field_bin(const std::string& path);

} // namespace ekb
