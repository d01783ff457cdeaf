#include "linsolve.hpp"

#include <cmath>

namespace ekb {

void PentaMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    const int n = rows();
    const double* xd = x.data();
    const double* d = diag.data();
    const double* w = west.data();
    const double* e = east.data();
    const double* s = south.data();
    const double* nn = north.data();
    double* yd = y.data();

    if (n <= 2 * nx + 2 || nx < 2) {
        // Degenerate grids: per-band passes with explicit bounds.
        for (int l = 0; l < n; ++l) yd[l] = d[l] * xd[l];
        for (int l = 1; l < n; ++l) yd[l] += w[l] * xd[l - 1];
        for (int l = 0; l < n - 1; ++l) yd[l] += e[l] * xd[l + 1];
        for (int l = nx; l < n; ++l) yd[l] += s[l] * xd[l - nx];
        for (int l = 0; l < n - nx; ++l) yd[l] += nn[l] * xd[l + nx];
        return;
    }

    // Edge bands are zero, so shifted reads only need to stay in bounds:
    // split off the first and last row to make the interior loop branch-free.
    yd[0] = d[0] * xd[0] + e[0] * xd[1] + nn[0] * xd[nx];
    for (int l = 1; l < nx; ++l)
        yd[l] = d[l] * xd[l] + w[l] * xd[l - 1] + e[l] * xd[l + 1] + nn[l] * xd[l + nx];
    for (int l = nx; l < n - nx; ++l)
        yd[l] = d[l] * xd[l] + w[l] * xd[l - 1] + e[l] * xd[l + 1] + s[l] * xd[l - nx] +
                nn[l] * xd[l + nx];
    for (int l = n - nx; l < n - 1; ++l)
        yd[l] = d[l] * xd[l] + w[l] * xd[l - 1] + e[l] * xd[l + 1] + s[l] * xd[l - nx];
    yd[n - 1] = d[n - 1] * xd[n - 1] + w[n - 1] * xd[n - 2] + s[n - 1] * xd[n - 1 - nx];
}

SolveReport bicgstab_jacobi(const PentaMatrix& A, const Eigen::VectorXd& b,
                            Eigen::VectorXd& x, double rel_tol, int max_iter) {
    const int n = A.rows();
    const double b_norm = b.norm();
    SolveReport report;

    if (b_norm == 0.0) {
        x.setZero();
        report.converged = true;
        return report;
    }
    const double target = rel_tol * b_norm;

    const Eigen::VectorXd inv_diag = A.diag.cwiseInverse();
    Eigen::VectorXd r(n), r_hat(n), p(n), v(n), s(n), t(n), p_hat(n), s_hat(n), work(n);

    A.multiply(x, work);
    r = b - work;
    if (r.norm() <= target) {
        report.converged = true;
        report.rel_residual = r.norm() / b_norm;
        return report;
    }

    r_hat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    p.setZero();
    v.setZero();

    for (int it = 1; it <= max_iter; ++it) {
        report.iterations = it;
        double rho_new = r_hat.dot(r);
        if (rho_new == 0.0 || omega == 0.0) {
            // Breakdown: restart from the current iterate.
            A.multiply(x, work);
            r = b - work;
            r_hat = r;
            rho_new = r.squaredNorm();
            if (rho_new == 0.0) break;
            p.setZero();
            v.setZero();
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        p_hat = inv_diag.cwiseProduct(p);
        A.multiply(p_hat, v);
        const double rhv = r_hat.dot(v);
        if (rhv == 0.0) {
            omega = 0.0;  // force restart next pass
            rho = rho_new;
            continue;
        }
        alpha = rho_new / rhv;
        s = r - alpha * v;
        s_hat = inv_diag.cwiseProduct(s);
        A.multiply(s_hat, t);
        const double tt = t.squaredNorm();
        omega = tt == 0.0 ? 0.0 : t.dot(s) / tt;
        x += alpha * p_hat + omega * s_hat;
        r = s - omega * t;
        rho = rho_new;

        const double r_norm = r.norm();
        if (r_norm <= target) {
            // Confirm with the true residual before declaring convergence.
            A.multiply(x, work);
            r = b - work;
            const double true_norm = r.norm();
            if (true_norm <= target) {
                report.converged = true;
                report.rel_residual = true_norm / b_norm;
                return report;
            }
        } else if (!std::isfinite(r_norm)) {
            break;
        }
    }

    A.multiply(x, work);
    report.rel_residual = (b - work).norm() / b_norm;
    report.converged = report.rel_residual <= rel_tol;
    return report;
}

} // namespace ekb
