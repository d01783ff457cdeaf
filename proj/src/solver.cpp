#include "solver.hpp"

#include "error.hpp"

#include <cmath>
#include <limits>

namespace ekb {

void FluidProps::validate() const {
    if (!(rho_f > 0.0) || !(mu_f > 0.0) || !(g > 0.0) ||
        !std::isfinite(rho_f + mu_f + g))
        throw InvalidArgument("FluidProps: density, viscosity and gravity must be positive");
}

void RockProps::validate() const {
    if (!(porosity > 0.0) || !(porosity <= 1.0))
        throw InvalidArgument("RockProps: porosity must lie in (0, 1]");
    if (!(specific_storage > 0.0) || !std::isfinite(specific_storage))
        throw InvalidArgument("RockProps: specific storage must be positive");
}

void SolverSettings::validate() const {
    if (!(picard_rel_tol > 0.0) || !(picard_rel_tol < 1.0) ||
        !(linear_rel_tol > 0.0) || !(linear_rel_tol < 1.0))
        throw InvalidArgument("SolverSettings: tolerances must lie in (0, 1)");
    if (linear_max_iter < 1)
        throw InvalidArgument("SolverSettings: need at least one linear iteration");
}

void BoundarySpec::validate(const Grid2D& grid) const {
    for (const EdgeBC* e : {&west, &east, &south, &north})
        if (e->kind == EdgeKind::Dirichlet && !std::isfinite(e->value))
            throw InvalidArgument("BoundarySpec: Dirichlet value must be finite");
    for (const auto& [cell, value] : fixed_cells) {
        if (!grid.contains(cell))
            throw InvalidArgument("BoundarySpec: fixed cell outside grid");
        if (!std::isfinite(value))
            throw InvalidArgument("BoundarySpec: fixed value must be finite");
    }
}

namespace {

constexpr int kMaxPicard = 50;

struct DirichletSet {
    std::vector<std::uint8_t> mask;
    Eigen::VectorXd value;
};

DirichletSet make_dirichlet(const Grid2D& g, const BoundarySpec& bc) {
    bc.validate(g);
    DirichletSet d;
    d.mask.assign(g.n_cells(), 0);
    d.value = Eigen::VectorXd::Zero(g.n_cells());
    auto set = [&](int l, double v) {
        d.mask[l] = 1;
        d.value[l] = v;
    };
    if (bc.south.kind == EdgeKind::Dirichlet)
        for (int i = 0; i < g.nx; ++i) set(g.cell_index(i, 0), bc.south.value);
    if (bc.north.kind == EdgeKind::Dirichlet)
        for (int i = 0; i < g.nx; ++i) set(g.cell_index(i, g.ny - 1), bc.north.value);
    if (bc.west.kind == EdgeKind::Dirichlet)
        for (int j = 0; j < g.ny; ++j) set(g.cell_index(0, j), bc.west.value);
    if (bc.east.kind == EdgeKind::Dirichlet)
        for (int j = 0; j < g.ny; ++j) set(g.cell_index(g.nx - 1, j), bc.east.value);
    for (const auto& [cell, value] : bc.fixed_cells) set(cell, value);
    return d;
}

double harmonic(double ka, double kb) {
    const double s = ka + kb;
    return s == 0.0 ? 0.0 : 2.0 * ka * kb / s;
}

Eigen::VectorXd cell_permeability(const LogPermField& perm) {
    Eigen::VectorXd k(perm.values.size());
    for (Eigen::Index l = 0; l < k.size(); ++l)
        k[l] = std::pow(10.0, perm.values[l]);
    return k;
}

void check_finite(const PentaMatrix& A, const char* what) {
    if (!A.diag.allFinite() || !A.west.allFinite() || !A.east.allFinite() ||
        !A.south.allFinite() || !A.north.allFinite())
        throw SolverDivergence(std::string(what) +
                                   ": non-finite matrix coefficient (permeability overflow)",
                               std::numeric_limits<double>::infinity());
}

/// Flow rows: (S_s V / dt) h'_l + sum_f T_f (h'_l - h'_n) = (S_s V / dt) h_l.
/// Dirichlet rows keep their would-be diagonal (times the prescribed value on
/// the right-hand side) so that no row dwarfs the others in the residual norm
/// the linear solver terminates on.
void assemble_flow_matrix(const Grid2D& g, const Eigen::VectorXd& k, double mob,
                          double storage, const DirichletSet& d, PentaMatrix& A) {
    A.resize(g.nx, g.ny);
    const double tx = mob * g.dy / g.dx;
    const double ty = mob * g.dx / g.dy;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int l = g.cell_index(i, j);
            double diag = storage;
            if (i > 0) {
                const double t = tx * harmonic(k[l], k[l - 1]);
                A.west[l] = -t;
                diag += t;
            }
            if (i < g.nx - 1) {
                const double t = tx * harmonic(k[l], k[l + 1]);
                A.east[l] = -t;
                diag += t;
            }
            if (j > 0) {
                const double t = ty * harmonic(k[l], k[l - g.nx]);
                A.south[l] = -t;
                diag += t;
            }
            if (j < g.ny - 1) {
                const double t = ty * harmonic(k[l], k[l + g.nx]);
                A.north[l] = -t;
                diag += t;
            }
            A.diag[l] = diag;
            if (d.mask[l]) {
                A.west[l] = 0.0;
                A.east[l] = 0.0;
                A.south[l] = 0.0;
                A.north[l] = 0.0;
            }
        }
    }
    check_finite(A, "flow");
}

FaceVelocities face_velocities(const Grid2D& g, const Eigen::VectorXd& k,
                               const Eigen::VectorXd& head, double mob) {
    FaceVelocities v;
    v.grid = g;
    v.x = Eigen::VectorXd::Zero((g.nx + 1) * g.ny);
    v.y = Eigen::VectorXd::Zero(g.nx * (g.ny + 1));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const int l = g.cell_index(i, j);
            v.x[v.x_face(i, j)] =
                -mob * harmonic(k[l - 1], k[l]) * (head[l] - head[l - 1]) / g.dx;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int l = g.cell_index(i, j);
            v.y[v.y_face(i, j)] =
                -mob * harmonic(k[l - g.nx], k[l]) * (head[l] - head[l - g.nx]) / g.dy;
        }
    return v;
}

/// Transport rows: (phi V / dt) c'_l + upwind advection + diffusion = rhs.
/// Advection uses the advective form (flux form minus c_l times the discrete
/// divergence), which keeps the matrix an M-matrix for any face field: each
/// inflow face adds |q| to the diagonal and -|q| on the neighbor.
void assemble_transport_matrix(const Grid2D& g, const FaceVelocities& vel,
                               double diffusion, double storage,
                               const DirichletSet& d, PentaMatrix& A) {
    A.resize(g.nx, g.ny);
    const double dax = diffusion * g.dy / g.dx;
    const double day = diffusion * g.dx / g.dy;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int l = g.cell_index(i, j);
            double diag = storage;
            if (i > 0) {
                diag += dax;
                A.west[l] -= dax;
                const double q = vel.x[vel.x_face(i, j)] * g.dy;
                if (q > 0.0) {  // inflow from the west
                    diag += q;
                    A.west[l] -= q;
                }
            }
            if (i < g.nx - 1) {
                diag += dax;
                A.east[l] -= dax;
                const double q = vel.x[vel.x_face(i + 1, j)] * g.dy;
                if (q < 0.0) {  // inflow from the east
                    diag -= q;
                    A.east[l] += q;
                }
            }
            if (j > 0) {
                diag += day;
                A.south[l] -= day;
                const double q = vel.y[vel.y_face(i, j)] * g.dx;
                if (q > 0.0) {  // inflow from the south
                    diag += q;
                    A.south[l] -= q;
                }
            }
            if (j < g.ny - 1) {
                diag += day;
                A.north[l] -= day;
                const double q = vel.y[vel.y_face(i, j + 1)] * g.dx;
                if (q < 0.0) {  // inflow from the north
                    diag -= q;
                    A.north[l] += q;
                }
            }
            A.diag[l] = diag;
            if (d.mask[l]) {  // Dirichlet row, diagonal kept for scaling
                A.west[l] = 0.0;
                A.east[l] = 0.0;
                A.south[l] = 0.0;
                A.north[l] = 0.0;
            }
        }
    }
    check_finite(A, "transport");
}

void build_rhs(const DirichletSet& d, double storage, const PentaMatrix& A,
               const Eigen::VectorXd& old, Eigen::VectorXd& rhs) {
    rhs.resize(old.size());
    for (Eigen::Index l = 0; l < old.size(); ++l)
        rhs[l] = d.mask[l] ? A.diag[l] * d.value[l] : storage * old[l];
}

/// Picard loop around the linear solve. The coefficients of both equations
/// are independent of the solved variable, so successive iterates agree
/// after the first pass and the tolerance test ends the loop.
void picard_solve(const PentaMatrix& A, const Eigen::VectorXd& rhs,
                  Eigen::VectorXd& x, const SolverSettings& settings,
                  const char* what) {
    Eigen::VectorXd prev = x;
    for (int pass = 1; pass <= kMaxPicard; ++pass) {
        const SolveReport rep =
            bicgstab_jacobi(A, rhs, x, settings.linear_rel_tol, settings.linear_max_iter);
        if (!rep.converged)
            throw SolverDivergence(
                std::string(what) + ": BiCGStab stalled at relative residual " +
                    std::to_string(rep.rel_residual) + " after " +
                    std::to_string(rep.iterations) + " iterations",
                rep.rel_residual);
        const double scale = std::max(x.norm(), 1e-300);
        if ((x - prev).norm() / scale <= settings.picard_rel_tol) return;
        prev = x;
    }
    throw SolverDivergence(std::string(what) + ": Picard iteration did not settle",
                           std::numeric_limits<double>::quiet_NaN());
}

} // namespace

FaceVelocities darcy_velocity(const LogPermField& perm, const Eigen::VectorXd& head,
                              const FluidProps& fluid) {
    perm.validate();
    fluid.validate();
    if (head.size() != perm.grid.n_cells())
        throw InvalidArgument("darcy_velocity: head size does not match grid");
    return face_velocities(perm.grid, cell_permeability(perm), head, fluid.mobility());
}

ForwardModel::ForwardModel(const ForwardConfig& cfg) : cfg_(cfg) {
    cfg_.fluid.validate();
    cfg_.rock.validate();
    cfg_.settings.validate();
    if (!(cfg_.dt > 0.0) || !std::isfinite(cfg_.dt))
        throw InvalidArgument("ForwardModel: time step must be positive");
    if (cfg_.with_transport && (!(cfg_.diffusion >= 0.0) || !std::isfinite(cfg_.diffusion)))
        throw InvalidArgument("ForwardModel: diffusion must be non-negative");

    const DirichletSet dh = make_dirichlet(cfg_.grid, cfg_.head_bc);
    head_dirichlet_ = dh.mask;
    head_dirichlet_value_ = dh.value;
    if (cfg_.with_transport) {
        const DirichletSet dc = make_dirichlet(cfg_.grid, cfg_.conc_bc);
        conc_dirichlet_ = dc.mask;
        conc_dirichlet_value_ = dc.value;
    }
}

DynamicState ForwardModel::initial_state() const {
    const int n = cfg_.grid.n_cells();
    DynamicState s;
    s.head = Eigen::VectorXd::Constant(n, cfg_.initial_head);
    for (int l = 0; l < n; ++l)
        if (head_dirichlet_[l]) s.head[l] = head_dirichlet_value_[l];
    if (cfg_.with_transport) {
        s.concentration = Eigen::VectorXd::Constant(n, cfg_.initial_conc);
        for (int l = 0; l < n; ++l)
            if (conc_dirichlet_[l]) s.concentration[l] = conc_dirichlet_value_[l];
    }
    return s;
}

void ForwardModel::solve_flow_step(Eigen::VectorXd& head) {
    const double storage =
        cfg_.rock.specific_storage * cfg_.grid.dx * cfg_.grid.dy / cfg_.dt;
    DirichletSet d{head_dirichlet_, head_dirichlet_value_};
    build_rhs(d, storage, flow_A_, head, rhs_);
    picard_solve(flow_A_, rhs_, head, cfg_.settings, "flow");
}

void ForwardModel::solve_transport_step(const FaceVelocities& vel,
                                        Eigen::VectorXd& conc,
                                        const Eigen::VectorXd* prev_conc) {
    const double storage = cfg_.rock.porosity * cfg_.grid.dx * cfg_.grid.dy / cfg_.dt;
    DirichletSet d{conc_dirichlet_, conc_dirichlet_value_};
    assemble_transport_matrix(cfg_.grid, vel, cfg_.diffusion, storage, d, transport_A_);
    build_rhs(d, storage, transport_A_, conc, rhs_);
    // Linear extrapolation of the previous step makes a better starting
    // point than the old field once the front is moving.
    if (prev_conc) work_ = 2.0 * conc - *prev_conc;
    else work_ = conc;
    picard_solve(transport_A_, rhs_, work_, cfg_.settings, "transport");
    conc.swap(work_);
}

void ForwardModel::assemble_flow(const LogPermField& perm) {
    const double storage =
        cfg_.rock.specific_storage * cfg_.grid.dx * cfg_.grid.dy / cfg_.dt;
    DirichletSet d{head_dirichlet_, head_dirichlet_value_};
    assemble_flow_matrix(cfg_.grid, cell_permeability(perm), cfg_.fluid.mobility(),
                         storage, d, flow_A_);
}

void ForwardModel::advance(const LogPermField& perm, DynamicState& state, int n_steps) {
    if (n_steps < 0) throw InvalidArgument("advance: negative step count");
    if (n_steps == 0) return;
    if (!(perm.grid == cfg_.grid))
        throw InvalidArgument("advance: permeability grid does not match model");
    if (state.head.size() != cfg_.grid.n_cells())
        throw InvalidArgument("advance: head size does not match grid");
    if (cfg_.with_transport && state.concentration.size() != cfg_.grid.n_cells())
        throw InvalidArgument("advance: concentration size does not match grid");

    const Eigen::VectorXd k = cell_permeability(perm);
    assemble_flow(perm);
    Eigen::VectorXd prev_conc;
    for (int step = 0; step < n_steps; ++step) {
        try {
            solve_flow_step(state.head);
            if (cfg_.with_transport) {
                const FaceVelocities vel =
                    face_velocities(cfg_.grid, k, state.head, cfg_.fluid.mobility());
                const Eigen::VectorXd old_conc = state.concentration;
                solve_transport_step(vel, state.concentration,
                                     step > 0 ? &prev_conc : nullptr);
                prev_conc = old_conc;
            }
        } catch (const SolverDivergence& e) {
            throw SolverDivergence("step " + std::to_string(step + 1) + " of " +
                                       std::to_string(n_steps) + ": " + e.what(),
                                   e.residual_norm);
        }
    }
}

std::vector<DynamicState> ForwardModel::run_forward(const DynamicState& initial,
                                                    const LogPermField& perm,
                                                    int n_steps) {
    std::vector<DynamicState> trajectory;
    trajectory.reserve(n_steps + 1);
    trajectory.push_back(initial);
    DynamicState state = initial;
    for (int step = 0; step < n_steps; ++step) {
        advance(perm, state, 1);
        trajectory.push_back(state);
    }
    return trajectory;
}

double ForwardModel::flux_balance(const LogPermField& perm,
                                  const Eigen::VectorXd& head) const {
    const Grid2D& g = cfg_.grid;
    const FaceVelocities vel =
        face_velocities(g, cell_permeability(perm), head, cfg_.fluid.mobility());
    double net = 0.0, gross = 0.0;
    auto tally = [&](int free_cell, double q_into_free) {
        (void)free_cell;
        net += q_into_free;
        gross += std::abs(q_into_free);
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const int r = g.cell_index(i, j);
            const int l = r - 1;
            if (head_dirichlet_[l] == head_dirichlet_[r]) continue;
            const double q = vel.x[vel.x_face(i, j)] * g.dy;  // positive: l -> r
            tally(r, head_dirichlet_[l] ? q : -q);
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int r = g.cell_index(i, j);
            const int l = r - g.nx;
            if (head_dirichlet_[l] == head_dirichlet_[r]) continue;
            const double q = vel.y[vel.y_face(i, j)] * g.dx;
            tally(r, head_dirichlet_[l] ? q : -q);
        }
    return gross == 0.0 ? 0.0 : std::abs(net) / gross;
}

DynamicState step_flow(const DynamicState& state, const LogPermField& perm,
                       const FluidProps& fluid, const RockProps& rock,
                       const BoundarySpec& bc, double dt,
                       const SolverSettings& settings) {
    ForwardConfig cfg;
    cfg.grid = perm.grid;
    cfg.fluid = fluid;
    cfg.rock = rock;
    cfg.head_bc = bc;
    cfg.dt = dt;
    cfg.settings = settings;
    ForwardModel model(cfg);
    DynamicState out = state;
    model.advance(perm, out, 1);
    return out;
}

DynamicState step_transport(const DynamicState& state, const FaceVelocities& velocity,
                            const RockProps& rock, const BoundarySpec& bc,
                            double diffusion, double dt,
                            const SolverSettings& settings) {
    rock.validate();
    settings.validate();
    if (!(dt > 0.0)) throw InvalidArgument("step_transport: time step must be positive");
    if (!state.has_concentration())
        throw InvalidArgument("step_transport: state has no concentration");
    const Grid2D& g = velocity.grid;
    if (state.concentration.size() != g.n_cells())
        throw InvalidArgument("step_transport: concentration size does not match grid");
    if (!(diffusion >= 0.0) || !std::isfinite(diffusion))
        throw InvalidArgument("step_transport: diffusion must be non-negative");

    const DirichletSet d = make_dirichlet(g, bc);
    const double storage = rock.porosity * g.dx * g.dy / dt;
    PentaMatrix A;
    assemble_transport_matrix(g, velocity, diffusion, storage, d, A);
    Eigen::VectorXd rhs;
    build_rhs(d, storage, A, state.concentration, rhs);
    DynamicState out = state;
    picard_solve(A, rhs, out.concentration, settings, "transport");
    return out;
}

} // namespace ekb
