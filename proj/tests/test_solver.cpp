#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scenario.hpp"
#include "solver.hpp"

#include <cmath>

using namespace ekb;

namespace {

LogPermField uniform_field(const Grid2D& grid, double log10k) {
    return {grid, Eigen::VectorXd::Constant(grid.n_cells(), log10k)};
}

} // namespace

TEST_CASE("darcy velocity vanishes for uniform head") {
    const Grid2D grid(5, 4, 2.0, 2.0);
    const LogPermField perm = uniform_field(grid, -12.0);
    const Eigen::VectorXd head = Eigen::VectorXd::Constant(grid.n_cells(), 10.0);
    const FaceVelocities v = darcy_velocity(perm, head, FluidProps{});
    CHECK(v.x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("darcy velocity on a 1D column matches the hand value") {
    // Uniform K = 1e-12 m^2 and a head slope of 1 m over 62 m:
    // |v| = 9.81e6 * 1e-12 / 62.
    const Grid2D grid(1, 4, 1.0, 15.5);
    const LogPermField perm = uniform_field(grid, -12.0);
    Eigen::VectorXd head(4);
    for (int j = 0; j < 4; ++j) head[j] = 11.0 - grid.center_y(j) / 62.0;
    const FaceVelocities v = darcy_velocity(perm, head, FluidProps{});
    const double expected = 9.81e6 * 1e-12 / 62.0;
    CHECK(expected == doctest::Approx(1.582e-7).epsilon(1e-3));
    for (int j = 1; j < 4; ++j)
        CHECK(v.y[v.y_face(0, j)] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(v.y[v.y_face(0, 0)] == 0.0);
    CHECK(v.y[v.y_face(0, 4)] == 0.0);
}

TEST_CASE("interface permeability is the harmonic mean") {
    const Grid2D grid(2, 1, 1.0, 1.0);
    LogPermField perm{grid, Eigen::VectorXd(2)};
    perm.values << -12.0, -14.0;
    Eigen::VectorXd head(2);
    head << 1.0, 0.0;  // gradient -1 per metre
    const FluidProps fluid;
    const FaceVelocities v = darcy_velocity(perm, head, fluid);
    const double face_k = v.x[v.x_face(1, 0)] / fluid.mobility();
    CHECK(face_k == doctest::Approx(2.0 / (1e12 + 1e14)).epsilon(1e-12));
    CHECK(face_k == doctest::Approx(1.980e-14).epsilon(1e-3));
}

TEST_CASE("steady homogeneous flow reproduces the linear head profile") {
    ScenarioSpec spec = build_scenario("tracer");
    ForwardConfig cfg = spec.forward_config();
    cfg.with_transport = false;
    ForwardModel model(cfg);
    const LogPermField perm = uniform_field(spec.grid, -12.0);
    DynamicState state = model.initial_state();
    model.advance(perm, state, 5);
    double max_dev = 0.0;
    for (int l = 0; l < spec.grid.n_cells(); ++l) {
        const double expected = 11.0 - spec.grid.cell_j(l) / 30.0;
        max_dev = std::max(max_dev, std::abs(state.head[l] - expected));
    }
    CHECK(max_dev < 1e-8);

    // Boundary flux balance at steady state.
    CHECK(model.flux_balance(perm, state.head) < 1e-10);
}

TEST_CASE("all-equal Dirichlet problem stays exactly at the initial state") {
    const Grid2D grid(6, 6, 2.0, 2.0);
    BoundarySpec bc;
    bc.south = bc.north = bc.west = bc.east = EdgeBC::dirichlet(10.0);
    const LogPermField perm = uniform_field(grid, -12.0);
    DynamicState state;
    state.head = Eigen::VectorXd::Constant(36, 10.0);
    const DynamicState next =
        step_flow(state, perm, FluidProps{}, RockProps{}, bc, 1000.0, SolverSettings{});
    CHECK(next.head == state.head);
}

TEST_CASE("well model heads respect the discrete maximum principle") {
    ScenarioSpec spec = build_scenario("well");
    ForwardModel model(spec.forward_config());
    const LogPermField perm = sample_field(spec.grid, spec.reference_stats, 11);
    DynamicState state = model.initial_state();
    for (int chunk = 0; chunk < 6; ++chunk) {
        model.advance(perm, state, 20);
        CHECK(state.head.minCoeff() >= 10.0 - 1e-9);
        CHECK(state.head.maxCoeff() <= 11.0 + 1e-9);
    }
}

TEST_CASE("transport trivial cases keep the field unchanged") {
    const Grid2D grid(5, 5, 2.0, 2.0);
    BoundarySpec bc;  // all no-flow
    RockProps rock;
    DynamicState state;
    state.head = Eigen::VectorXd::Constant(25, 10.0);
    state.concentration = Eigen::VectorXd::LinSpaced(25, 0.06, 0.08);

    FaceVelocities zero;
    zero.grid = grid;
    zero.x = Eigen::VectorXd::Zero(6 * 5);
    zero.y = Eigen::VectorXd::Zero(5 * 6);
    DynamicState next =
        step_transport(state, zero, rock, bc, 0.0, 1000.0, SolverSettings{});
    CHECK(next.concentration == state.concentration);

    // Uniform concentration equal to every Dirichlet value, arbitrary flow.
    bc.south = EdgeBC::dirichlet(0.06);
    bc.north = EdgeBC::dirichlet(0.06);
    state.concentration.setConstant(0.06);
    FaceVelocities flow = zero;
    flow.y.setConstant(1e-6);
    for (int i = 0; i < 5; ++i) {
        flow.y[flow.y_face(i, 0)] = 0.0;
        flow.y[flow.y_face(i, 5)] = 0.0;
    }
    next = step_transport(state, flow, rock, bc, 1.5e-9, 1000.0, SolverSettings{});
    CHECK(next.concentration == state.concentration);
}

TEST_CASE("tracer concentrations stay inside the Dirichlet hull") {
    ScenarioSpec spec = build_scenario("tracer");
    ForwardModel model(spec.forward_config());
    const LogPermField perm = sample_field(spec.grid, spec.reference_stats, 5);
    DynamicState state = model.initial_state();
    model.advance(perm, state, 60);
    CHECK(state.concentration.minCoeff() >= 0.06 - 1e-12);
    CHECK(state.concentration.maxCoeff() <= 0.08 + 1e-12);
}

TEST_CASE("homogeneous breakthrough lands near the plug-flow time") {
    ScenarioSpec spec = build_scenario("tracer");
    ForwardModel model(spec.forward_config());
    const LogPermField perm = uniform_field(spec.grid, -12.0);
    DynamicState state = model.initial_state();
    const int mid = spec.grid.cell_index(15, 15);  // (31 m, 31 m)
    double crossing = -1.0;
    double prev = state.concentration[mid];
    for (int step = 1; step <= spec.n_steps; ++step) {
        model.advance(perm, state, 1);
        const double c = state.concentration[mid];
        if (crossing < 0.0 && c >= 0.07) {
            const double frac = (0.07 - prev) / (c - prev);
            crossing = (step - 1 + frac) * spec.dt();
            break;
        }
        prev = c;
    }
    const double v = 9.81e6 * 1e-12 / 62.0;
    const double analytic = 31.0 / (v / 0.1);
    REQUIRE(crossing > 0.0);
    CHECK(crossing > 0.75 * analytic);
    CHECK(crossing < 1.25 * analytic);
}

TEST_CASE("halving the time step barely changes the final head") {
    ScenarioSpec spec = build_scenario("tracer");
    ForwardConfig cfg = spec.forward_config();
    cfg.with_transport = false;
    const LogPermField perm = sample_field(spec.grid, spec.reference_stats, 5);

    ForwardModel coarse(cfg);
    DynamicState a = coarse.initial_state();
    coarse.advance(perm, a, spec.n_steps);

    cfg.dt = spec.dt() / 2.0;
    ForwardModel fine(cfg);
    DynamicState b = fine.initial_state();
    fine.advance(perm, b, 2 * spec.n_steps);

    CHECK((a.head - b.head).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("run_forward returns the initial state for an empty window") {
    ScenarioSpec spec = build_scenario("tracer");
    ForwardModel model(spec.forward_config());
    const LogPermField perm = uniform_field(spec.grid, -12.0);
    const DynamicState init = model.initial_state();
    const auto trajectory = model.run_forward(init, perm, 0);
    REQUIRE(trajectory.size() == 1);
    CHECK(trajectory[0].head == init.head);

    const auto three = model.run_forward(init, perm, 3);
    CHECK(three.size() == 4);
}

TEST_CASE("advance is deterministic") {
    ScenarioSpec spec = build_scenario("tracer");
    ForwardModel model(spec.forward_config());
    const LogPermField perm = sample_field(spec.grid, spec.reference_stats, 6);
    DynamicState a = model.initial_state();
    DynamicState b = model.initial_state();
    model.advance(perm, a, 10);
    ForwardModel model2(spec.forward_config());
    model2.advance(perm, b, 10);
    CHECK(a.head == b.head);
    CHECK(a.concentration == b.concentration);
}

TEST_CASE("solver reports divergence with the residual attached") {
    const Grid2D grid(4, 4, 1.0, 1.0);
    BoundarySpec bc;
    bc.south = EdgeBC::dirichlet(11.0);
    bc.north = EdgeBC::dirichlet(10.0);
    SolverSettings strict{1e-10, 1e-14, 1};  // one iteration cannot converge
    const LogPermField perm = sample_field(grid, {-12.0, 1.0, 3.0}, 3);
    DynamicState state;
    state.head = Eigen::VectorXd::Constant(16, 5.0);
    CHECK_THROWS_AS(
        step_flow(state, perm, FluidProps{}, RockProps{}, bc, 100.0, strict),
        SolverDivergence);
}

TEST_CASE("property validation rejects nonsense") {
    CHECK_THROWS_AS(RockProps({0.0, 1e-5}).validate(), InvalidArgument);
    CHECK_THROWS_AS(RockProps({0.1, 0.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(FluidProps({-1.0, 1e-3, 9.81}).validate(), InvalidArgument);
    CHECK_THROWS_AS(SolverSettings({0.0, 1e-14, 500}).validate(), InvalidArgument);
    CHECK_THROWS_AS(SolverSettings({1e-10, 1e-14, 0}).validate(), InvalidArgument);
    BoundarySpec bad;
    bad.fixed_cells = {{99, 11.0}};
    CHECK_THROWS_AS(bad.validate(Grid2D(3, 3, 1.0, 1.0)), InvalidArgument);
}
