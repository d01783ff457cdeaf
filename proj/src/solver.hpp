#pragma once

/// Implicit finite-difference forward model: transient groundwater flow and
/// conservative tracer transport on a cell-centered 2D grid.
///
/// Flow:      S_s dh/dt = div( (rho g / mu) K grad h )
/// Transport: phi dc/dt = div( D grad c ) - v . grad c
///
/// Both equations are stepped with backward Euler on a 5-point stencil.
/// Interface permeabilities are harmonic means, advection is first-order
/// upwind against the Darcy face velocity, and Dirichlet conditions are
/// imposed on boundary-cell centers. Linear systems are solved by BiCGStab
/// with Jacobi preconditioning inside a Picard loop (the coefficients here
/// are head-independent, so the loop settles after one pass; its tolerance
/// test is kept).

#include "field.hpp"
#include "grid.hpp"
#include "linsolve.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace ekb {

struct FluidProps {
    double rho_f = 1000.0;  // kg/m^3
    double mu_f = 1.0e-3;   // Pa s
    double g = 9.81;        // m/s^2

    double mobility() const { return rho_f * g / mu_f; }
    void validate() const;
};

struct RockProps {
    double porosity = 0.1;           // -
    double specific_storage = 1e-5;  // 1/m

    void validate() const;
};

struct SolverSettings {
    double picard_rel_tol = 1e-10;
    double linear_rel_tol = 1e-14;
    int linear_max_iter = 500;

    void validate() const;
};

enum class EdgeKind { NoFlow, Dirichlet };

struct EdgeBC {
    EdgeKind kind = EdgeKind::NoFlow;
    double value = 0.0;

    static EdgeBC no_flow() { return {EdgeKind::NoFlow, 0.0}; }
    static EdgeBC dirichlet(double v) { return {EdgeKind::Dirichlet, v}; }
};

/// Per-edge conditions plus optional fixed interior cells (e.g. a well held
/// at a prescribed head).
struct BoundarySpec {
    EdgeBC west, east, south, north;
    std::vector<std::pair<int, double>> fixed_cells;

    void validate(const Grid2D& grid) const;
};

struct DynamicState {
    Eigen::VectorXd head;           // m
    Eigen::VectorXd concentration;  // mol/l; empty when the model has none

    bool has_concentration() const { return concentration.size() > 0; }
};

/// Face-normal Darcy velocities. x faces are indexed j*(nx+1)+i for the face
/// west of cell (i, j); y faces j*nx+i for the face south of cell (i, j).
/// Positive values point in +x / +y.
struct FaceVelocities {
    Grid2D grid;
    Eigen::VectorXd x;  // (nx+1)*ny
    Eigen::VectorXd y;  // nx*(ny+1)

    int x_face(int i, int j) const { return j * (grid.nx + 1) + i; }
    int y_face(int i, int j) const { return j * grid.nx + i; }
};

/// Face velocities from Darcy's law with harmonic-mean interface
/// permeability. Domain-edge faces carry zero velocity.
FaceVelocities darcy_velocity(const LogPermField& perm,
                              const Eigen::VectorXd& head,
                              const FluidProps& fluid);

struct ForwardConfig {
    Grid2D grid;
    FluidProps fluid;
    RockProps rock;
    BoundarySpec head_bc;
    double initial_head = 0.0;
    bool with_transport = false;
    BoundarySpec conc_bc;
    double initial_conc = 0.0;
    double diffusion = 0.0;  // m^2/s, isotropic
    double dt = 0.0;         // s
    SolverSettings settings;
};

class ForwardModel {
public:
    explicit ForwardModel(const ForwardConfig& cfg);

    const ForwardConfig& config() const { return cfg_; }

    DynamicState initial_state() const;

    /// Advance the state in place over n_steps implicit steps. The flow
    /// matrix is assembled once (it does not depend on head or time).
    void advance(const LogPermField& perm, DynamicState& state, int n_steps);

    /// Trajectory including the initial state, one entry per step boundary.
    std::vector<DynamicState> run_forward(const DynamicState& initial,
                                          const LogPermField& perm,
                                          int n_steps);

    /// Relative net boundary flux |sum q| / sum |q| over all faces between
    /// Dirichlet and free cells; near zero once the flow field is steady.
    double flux_balance(const LogPermField& perm,
                        const Eigen::VectorXd& head) const;

private:
    void assemble_flow(const LogPermField& perm);
    void solve_flow_step(Eigen::VectorXd& head);
    void solve_transport_step(const FaceVelocities& vel, Eigen::VectorXd& conc,
                              const Eigen::VectorXd* prev_conc);

    ForwardConfig cfg_;
    std::vector<std::uint8_t> head_dirichlet_;
    Eigen::VectorXd head_dirichlet_value_;
    std::vector<std::uint8_t> conc_dirichlet_;
    Eigen::VectorXd conc_dirichlet_value_;

    PentaMatrix flow_A_, transport_A_;
    Eigen::VectorXd rhs_, work_;
};

/// Single implicit flow step (pure; assembles internally).
DynamicState step_flow(const DynamicState& state, const LogPermField& perm,
                       const FluidProps& fluid, const RockProps& rock,
                       const BoundarySpec& bc, double dt,
                       const SolverSettings& settings);

/// Single implicit advection-diffusion step (pure; assembles internally).
DynamicState step_transport(const DynamicState& state,
                            const FaceVelocities& velocity,
                            const RockProps& rock, const BoundarySpec& bc,
                            double diffusion, double dt,
                            const SolverSettings& settings);

} // namespace ekb
