#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "field.hpp"

#include <cmath>

using namespace ekb;

TEST_CASE("spherical correlation endpoints and midpoint") {
    CHECK(spherical_correlation(0.0, 50.0) == 1.0);
    CHECK(spherical_correlation(50.0, 50.0) == 0.0);
    CHECK(spherical_correlation(80.0, 50.0) == 0.0);
    // Independent evaluation of 1 - 1.5 u + 0.5 u^3 at u = 0.5.
    const double u = 25.0 / 50.0;
    const double direct = 1.0 - 1.5 * u + 0.5 * u * u * u;
    CHECK(direct == doctest::Approx(0.3125).epsilon(1e-15));
    CHECK(spherical_correlation(25.0, 50.0) == doctest::Approx(0.3125).epsilon(1e-15));
}

TEST_CASE("spherical correlation rejects bad inputs") {
    CHECK_THROWS_AS(spherical_correlation(-1.0, 50.0), InvalidArgument);
    CHECK_THROWS_AS(spherical_correlation(1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(spherical_correlation(std::nan(""), 50.0), InvalidArgument);
    CHECK_THROWS_AS(spherical_correlation(1.0, -3.0), InvalidArgument);
}

TEST_CASE("spherical correlation is monotone, continuous, in [0, 1]") {
    double prev = 1.0;
    for (int i = 1; i <= 5000; ++i) {
        const double d = i * 0.02;  // up to 2x the range
        const double c = spherical_correlation(d, 50.0);
        CHECK(c <= prev + 1e-15);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
        prev = c;
    }
    // continuity at the range
    CHECK(spherical_correlation(50.0 - 1e-9, 50.0) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("printed quadratic variant differs inside the range only") {
    CHECK(spherical_correlation_printed(0.0, 50.0) == 1.0);
    CHECK(spherical_correlation_printed(50.0, 50.0) == 0.0);
    const double u = 0.5;
    CHECK(spherical_correlation_printed(25.0, 50.0) ==
          doctest::Approx(1.0 - 1.5 * u + 0.5 * u * u));
}

TEST_CASE("build_covariance matches the correlation model") {
    // Two cells 50 m apart: exactly at the range, so zero off-diagonal.
    Grid2D g2(2, 1, 50.0, 1.0);
    FieldStats stats{0.0, 0.5, 50.0, CorrelationModel::Spherical};
    Eigen::MatrixXd cov = build_covariance(g2, stats);
    CHECK(cov(0, 0) == doctest::Approx(0.25));
    CHECK(cov(1, 1) == doctest::Approx(0.25));
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 0) == 0.0);

    // Two cells 25 m apart.
    Grid2D g3(2, 1, 25.0, 1.0);
    cov = build_covariance(g3, stats);
    CHECK(cov(0, 1) == doctest::Approx(0.25 * 0.3125).epsilon(1e-14));

    // Zero variance gives the zero matrix.
    stats.stddev = 0.0;
    cov = build_covariance(g3, stats);
    CHECK(cov.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance is symmetric and factorizable on the benchmark grid") {
    Grid2D grid(31, 31, 2.0, 2.0);
    FieldStats stats{-12.0, 0.5, 50.0, CorrelationModel::Spherical};
    Eigen::MatrixXd cov = build_covariance(grid, stats);
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_NOTHROW(FieldSampler(grid, stats));
}

TEST_CASE("sampling is deterministic and respects fixed stats") {
    Grid2D grid(8, 8, 5.0, 5.0);
    FieldStats stats{-12.5, 0.5, 20.0, CorrelationModel::Spherical};
    const LogPermField a = sample_field(grid, stats, 99);
    const LogPermField b = sample_field(grid, stats, 99);
    CHECK(a.values == b.values);

    stats.stddev = 0.0;
    const LogPermField c = sample_field(grid, stats, 99);
    CHECK(c.values.minCoeff() == -12.5);
    CHECK(c.values.maxCoeff() == -12.5);
}

TEST_CASE("ensemble statistics reproduce mean, stddev and the variogram") {
    // Small grid keeps 10k samples cheap; per-cell moments within 3 standard
    // errors and the lag-25 semivariance within 5% of the model.
    Grid2D grid(2, 1, 25.0, 1.0);
    FieldStats stats{-12.0, 0.5, 50.0, CorrelationModel::Spherical};
    FieldSampler sampler(grid, stats);
    const int n = 10000;
    double sum0 = 0.0, sq0 = 0.0, semivar = 0.0;
    for (int i = 0; i < n; ++i) {
        RngStream stream(4242, StreamPurpose::FieldSample, i);
        const LogPermField f = sampler.sample(stream);
        sum0 += f.values[0];
        sq0 += f.values[0] * f.values[0];
        const double diff = f.values[0] - f.values[1];
        semivar += 0.5 * diff * diff;
    }
    const double mean = sum0 / n;
    const double stddev = std::sqrt(sq0 / n - mean * mean);
    CHECK(std::abs(mean - stats.mean) <= 3.0 * stats.stddev / std::sqrt(double(n)));
    CHECK(stddev == doctest::Approx(0.5).epsilon(3.0 / std::sqrt(2.0 * n)));
    const double model = 0.25 * (1.0 - 0.3125);
    CHECK(semivar / n == doctest::Approx(model).epsilon(0.05));
}

TEST_CASE("field serialization round-trips") {
    Grid2D grid(3, 2, 2.0, 2.0);
    FieldStats stats{-12.0, 0.5, 5.0, CorrelationModel::Spherical};
    const LogPermField f = sample_field(grid, stats, 1);
    const std::string path = "test_field_dump.bin";
    write_field_bin(f, path);
    const LogPermField g = read_field_bin(path);
    CHECK(g.grid == f.grid);
    CHECK(g.values == f.values);
    std::remove(path.c_str());
    CHECK_NOTHROW(write_field_csv(f, "test_field_dump.csv"));
    std::remove("test_field_dump.csv");
}

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid2D(1, 1, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(Grid2D(2, 2, 0.0, 1.0), InvalidArgument);
    const Grid2D g(31, 31, 2.0, 2.0);
    CHECK(g.n_cells() == 961);
    CHECK(g.center_x(g.cell_index(9, 15)) == doctest::Approx(19.0));
    CHECK(g.center_y(g.cell_index(9, 15)) == doctest::Approx(31.0));
}
