#pragma once

#include "error.hpp"

#include <cmath>
#include <string>

namespace ekb {

/// Uniform cell-centered 2D grid. Cell (i, j) has its center at
/// ((i + 0.5) dx, (j + 0.5) dy), 0-based, row-major linear index j*nx + i.
/// The y axis points north: j = 0 is the southern row.
struct Grid2D {
    int nx = 0, ny = 0;
    double dx = 0.0, dy = 0.0;

    Grid2D() = default;
    Grid2D(int nx_, int ny_, double dx_, double dy_)
        : nx(nx_), ny(ny_), dx(dx_), dy(dy_) {
        if (nx < 1 || ny < 1 || nx * ny < 2)
            throw InvalidArgument("Grid2D: need at least two cells, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
        if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy))
            throw InvalidArgument("Grid2D: cell sizes must be positive and finite");
    }

    int n_cells() const { return nx * ny; }
    int cell_index(int i, int j) const { return j * nx + i; }
    int cell_i(int l) const { return l % nx; }
    int cell_j(int l) const { return l / nx; }
    double center_x(int l) const { return (cell_i(l) + 0.5) * dx; }
    double center_y(int l) const { return (cell_j(l) + 0.5) * dy; }

    double distance(int l, int m) const {
        const double ddx = center_x(l) - center_x(m);
        const double ddy = center_y(l) - center_y(m);
        return std::sqrt(ddx * ddx + ddy * ddy);
    }

    bool contains(int l) const { return l >= 0 && l < n_cells(); }

    bool operator==(const Grid2D& o) const {
        return nx == o.nx && ny == o.ny && dx == o.dx && dy == o.dy;
    }
};

} // namespace ekb
