#pragma once

/// Five-point-stencil linear systems and their iterative solution.

#include <Eigen/Dense>

namespace ekb {

/// Pentadiagonal matrix from a 5-point stencil on an nx-by-ny grid,
/// row-major cell order l = j*nx + i. Band coefficients that would reach
/// across the domain edge must be zero (set_zero() starts from that state).
struct PentaMatrix {
    int nx = 0, ny = 0;
    Eigen::VectorXd diag, west, east, south, north;

    void resize(int nx_, int ny_) {
        nx = nx_;
        ny = ny_;
        const int n = nx * ny;
        diag.resize(n);
        west.resize(n);
        east.resize(n);
        south.resize(n);
        north.resize(n);
        set_zero();
    }

    void set_zero() {
        diag.setZero();
        west.setZero();
        east.setZero();
        south.setZero();
        north.setZero();
    }

    int rows() const { return nx * ny; }

    void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Preconditioned BiCGStab with Jacobi (diagonal) preconditioning.
/// Iterates until the true relative residual |b - A x| / |b| drops to
/// rel_tol, or max_iter iterations are spent. x holds the initial guess on
/// entry and the approximate solution on return.
SolveReport bicgstab_jacobi(const PentaMatrix& A, const Eigen::VectorXd& b,
                            Eigen::VectorXd& x, double rel_tol, int max_iter);

} // namespace ekb
