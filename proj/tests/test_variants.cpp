#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "variants.hpp"

#include <cmath>

using namespace ekb;

namespace {

Ensemble make_ensemble(int n_cells, const Eigen::MatrixXd& members) {
    return Ensemble{StateLayout{n_cells, false}, members};
}

MeasurementBatch head_batch(std::vector<int> cells, double y, double r_var) {
    MeasurementBatch b;
    b.obs_cells = std::move(cells);
    b.kind = ObsKind::Head;
    b.values = Eigen::VectorXd::Constant(int(b.obs_cells.size()), y);
    b.noise_var = Eigen::VectorXd::Constant(int(b.obs_cells.size()), r_var);
    b.time_index = 1;
    return b;
}

} // namespace

TEST_CASE("gaspari_cohn endpoints and branch continuity") {
    const double lambda = 150.0;
    const double a = std::sqrt(10.0 / 3.0) * lambda;
    CHECK(gaspari_cohn(0.0, lambda) == 1.0);
    CHECK(gaspari_cohn(2.0 * a, lambda) == 0.0);
    CHECK(gaspari_cohn(3.0 * a, lambda) == 0.0);

    // Value 5/24 at u = 1 from both polynomial branches.
    const double at_a = gaspari_cohn(a, lambda);
    CHECK(at_a == doctest::Approx(5.0 / 24.0).epsilon(1e-12));
    CHECK(gaspari_cohn(a * (1.0 - 1e-13), lambda) == doctest::Approx(at_a).epsilon(1e-11));
    CHECK(gaspari_cohn(a * (1.0 + 1e-13), lambda) == doctest::Approx(at_a).epsilon(1e-11));
    CHECK(gaspari_cohn(2.0 * a * (1.0 - 1e-13), lambda) ==
          doctest::Approx(0.0).epsilon(1e-11));

    CHECK_THROWS_AS(gaspari_cohn(-1.0, lambda), InvalidArgument);
    CHECK_THROWS_AS(gaspari_cohn(1.0, 0.0), InvalidArgument);
}

TEST_CASE("gaspari_cohn is monotone non-increasing and bounded") {
    const double lambda = 150.0;
    const double a = std::sqrt(10.0 / 3.0) * lambda;
    double prev = 1.0;
    for (int i = 1; i <= 10000; ++i) {
        const double d = 2.2 * a * i / 10000.0;
        const double w = gaspari_cohn(d, lambda);
        CHECK(w <= prev + 1e-14);
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
        prev = w;
    }
}

TEST_CASE("damped update scales only the parameter increment") {
    Eigen::MatrixXd members(2, 4);
    members << 1.0, 2.0, 3.0, 4.0,
               0.5, 1.0, 1.5, 2.5;
    const Ensemble ens = make_ensemble(1, members);
    const MeasurementBatch batch = head_batch({0}, 1.2, 0.3);
    const GainRep gain = kalman_gain(ens, batch);
    RngStream stream(2, StreamPurpose::ObsPerturb, 1);
    const Eigen::MatrixXd d = perturb_observations(batch, 4, stream);

    const Ensemble classical = analysis_update(ens, batch, d, gain);
    const Ensemble undamped = damped_update(ens, batch, d, gain, 1.0);
    CHECK(undamped.members == classical.members);

    const Ensemble damped = damped_update(ens, batch, d, gain, 0.1);
    const Eigen::MatrixXd full = classical.members - members;
    const Eigen::MatrixXd scaled = damped.members - members;
    CHECK((scaled.row(0) - 0.1 * full.row(0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(scaled.row(1) == full.row(1));

    // Zero innovation leaves everything alone.
    const Eigen::MatrixXd hx = apply_H(ens.members, batch, ens.layout);
    CHECK(damped_update(ens, batch, hx, gain, 0.1).members == members);

    CHECK_THROWS_AS(damped_update(ens, batch, d, gain, 0.0), InvalidArgument);
    CHECK_THROWS_AS(damped_update(ens, batch, d, gain, 1.5), InvalidArgument);
}

TEST_CASE("huge localization length reproduces the classical gain") {
    const Grid2D grid(4, 4, 20.0, 20.0);
    Eigen::MatrixXd members(32, 10);
    RngStream stream(31, StreamPurpose::Test, 0);
    for (int i = 0; i < members.size(); ++i) members.data()[i] = stream.next_normal();
    const Ensemble ens = make_ensemble(16, members);
    const MeasurementBatch batch = head_batch({0, 5, 12}, 0.0, 0.2);

    const Eigen::MatrixXd classical =
        kalman_gain(ens, batch).apply(Eigen::MatrixXd::Identity(3, 3));
    const Eigen::MatrixXd local =
        localized_gain(ens, batch, grid, 1e9).apply(Eigen::MatrixXd::Identity(3, 3));
    CHECK((local - classical).cwiseAbs().maxCoeff() <
          1e-10 * classical.cwiseAbs().maxCoeff());
}

TEST_CASE("compact support zeroes gain rows far from every observation") {
    const Grid2D grid(10, 1, 100.0, 1.0);
    Eigen::MatrixXd members(20, 8);
    RngStream stream(32, StreamPurpose::Test, 0);
    for (int i = 0; i < members.size(); ++i) members.data()[i] = stream.next_normal();
    const Ensemble ens = make_ensemble(10, members);
    const MeasurementBatch batch = head_batch({0}, 0.0, 0.2);

    const double lambda = 10.0;  // support ends at 2 a = 36.5 m << 100 m
    const Eigen::MatrixXd k =
        localized_gain(ens, batch, grid, lambda).apply(Eigen::MatrixXd::Identity(1, 1));
    for (int cell = 1; cell < 10; ++cell) {
        CHECK(k(cell, 0) == 0.0);        // parameter block
        CHECK(k(10 + cell, 0) == 0.0);   // head block
    }
    CHECK(k(10, 0) != 0.0);  // the observed cell itself keeps its gain
}

TEST_CASE("localized gain equals the explicit Schur-product construction") {
    const Grid2D grid(2, 1, 30.0, 1.0);
    Eigen::MatrixXd members(4, 6);
    members << 1.0, 2.0, 0.5, 1.5, 2.5, 0.8,
               0.3, 0.7, 0.2, 0.9, 0.1, 0.5,
               2.0, 1.0, 1.8, 1.2, 1.6, 1.4,
               0.9, 1.1, 0.95, 1.05, 1.0, 1.02;
    const Ensemble ens = make_ensemble(2, members);
    const MeasurementBatch batch = head_batch({0, 1}, 1.0, 0.25);
    const double lambda = 25.0;

    const Eigen::MatrixXd anomalies =
        ens.members.colwise() - ens.members.rowwise().mean();
    const Eigen::MatrixXd p = anomalies * anomalies.transpose() / 5.0;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 4);
    h(0, 2) = 1.0;
    h(1, 3) = 1.0;
    Eigen::MatrixXd rho(4, 2);
    for (int s = 0; s < 4; ++s)
        for (int m = 0; m < 2; ++m)
            rho(s, m) = gaspari_cohn(grid.distance(s % 2, m), lambda);
    Eigen::MatrixXd innov = h * p * h.transpose();
    innov.diagonal() += batch.noise_var;
    const Eigen::MatrixXd expected =
        (p * h.transpose()).cwiseProduct(rho) * innov.inverse();

    const Eigen::MatrixXd actual =
        localized_gain(ens, batch, grid, lambda).apply(Eigen::MatrixXd::Identity(2, 2));
    CHECK((actual - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hybrid gain limits") {
    Eigen::MatrixXd members(2, 4);
    const double c = std::sqrt(0.18);  // head sample variance exactly 0.3
    members.row(0).setZero();
    members.row(1) << -1.5 * c, -0.5 * c, 0.5 * c, 1.5 * c;
    const Ensemble ens = make_ensemble(1, members);
    const MeasurementBatch batch = head_batch({0}, 0.0, 0.05);
    StaticDiag sd;
    sd.head = 0.25;

    // beta = 1: classical.
    const Eigen::MatrixXd classical =
        kalman_gain(ens, batch).apply(Eigen::MatrixXd::Identity(1, 1));
    const Eigen::MatrixXd full_ens =
        hybrid_gain(ens, batch, 1.0, sd).apply(Eigen::MatrixXd::Identity(1, 1));
    CHECK((full_ens - classical).cwiseAbs().maxCoeff() == 0.0);

    // beta = 0: pure static, K = S / (S + R).
    const Eigen::MatrixXd pure_static =
        hybrid_gain(ens, batch, 0.0, sd).apply(Eigen::MatrixXd::Identity(1, 1));
    CHECK(pure_static(1, 0) == doctest::Approx(0.25 / 0.30).epsilon(1e-12));

    // beta = 0.5 with P = 0.3, S = 0.25, R = 0.05.
    const Eigen::MatrixXd blended =
        hybrid_gain(ens, batch, 0.5, sd).apply(Eigen::MatrixXd::Identity(1, 1));
    CHECK(blended(1, 0) == doctest::Approx(0.275 / 0.325).epsilon(1e-12));
    CHECK(blended(1, 0) == doctest::Approx(0.84615).epsilon(1e-4));

    CHECK_THROWS_AS(hybrid_gain(ens, batch, -0.1, sd), InvalidArgument);
}

TEST_CASE("dual-stage block updates restrict the classical gain") {
    Eigen::MatrixXd members(6, 5);
    RngStream stream(77, StreamPurpose::Test, 4);
    for (int i = 0; i < members.size(); ++i) members.data()[i] = stream.next_normal();
    const Ensemble ens = make_ensemble(3, members);
    const MeasurementBatch batch = head_batch({0, 2}, 0.5, 0.2);
    const GainRep gain = kalman_gain(ens, batch);
    RngStream pstream(78, StreamPurpose::ObsPerturb, 1);
    const Eigen::MatrixXd d = perturb_observations(batch, 5, pstream);

    const Eigen::MatrixXd classical =
        analysis_update(ens, batch, d, gain).members - members;
    const Ensemble stage1 = parameter_only_update(ens, batch, d, gain);
    const Eigen::MatrixXd inc1 = stage1.members - members;
    CHECK((inc1.topRows(3) - classical.topRows(3)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(inc1.bottomRows(3).cwiseAbs().maxCoeff() == 0.0);

    const Ensemble stage2 = state_only_update(ens, batch, d, gain);
    const Eigen::MatrixXd inc2 = stage2.members - members;
    CHECK((inc2.bottomRows(3) - classical.bottomRows(3)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(inc2.topRows(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("variant configuration validation") {
    VariantConfig v;
    v.kind = VariantKind::Damped;
    v.alpha = 0.0;
    CHECK_THROWS_AS(v.validate(), InvalidArgument);
    v.alpha = 0.1;
    CHECK_NOTHROW(v.validate());
    v.kind = VariantKind::Local;
    v.lambda = -5.0;
    CHECK_THROWS_AS(v.validate(), InvalidArgument);
    v.lambda = 150.0;
    v.id = "bad id with spaces";
    CHECK_THROWS_AS(v.validate(), InvalidArgument);
    CHECK(variant_kind_from_name("normal_score") == VariantKind::NormalScore);
    CHECK_THROWS_AS(variant_kind_from_name("bogus"), InvalidArgument);
}
