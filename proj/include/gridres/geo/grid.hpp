#pragma once

#include "gridres/geo/geometry.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gridres::geo {

struct GridCell {
    int id = 0;
    int row = 0;
    int col = 0;
    Rect square;

    Point centroid() const { return square.center(); }
};

/// Square lattice over a study area. Row 0 is the southern-most row and ids
/// run row-major from the origin corner.
struct Grid {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 0.0;
    int n_rows = 0;
    int n_cols = 0;
    std::vector<GridCell> cells;

    std::size_t size() const { return cells.size(); }
    const GridCell& at(int row, int col) const { return cells[static_cast<std::size_t>(row * n_cols + col)]; }
    Rect extent() const {
        return {origin_x, origin_y, origin_x + cell_size * n_cols, origin_y + cell_size * n_rows};
    }
    bool same_shape(const Grid& o) const {
        return origin_x == o.origin_x && origin_y == o.origin_y && cell_size == o.cell_size && n_rows == o.n_rows &&
               n_cols == o.n_cols;
    }
};

/// Cover `bbox` with congruent square cells. The last row and column may
/// overhang the bbox edge.
inline Grid build_grid(const Rect& bbox, double cell_size) {
    if (bbox.degenerate())
        throw DataError("build_grid: degenerate bounding box (" + std::to_string(bbox.width()) + " x " +
                        std::to_string(bbox.height()) + " m)");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw DataError("build_grid: cell_size must be positive, got " + std::to_string(cell_size));

    Grid g;
    g.origin_x = bbox.min_x;
    g.origin_y = bbox.min_y;
    g.cell_size = cell_size;
    g.n_cols = static_cast<int>(std::ceil(bbox.width() / cell_size));
    g.n_rows = static_cast<int>(std::ceil(bbox.height() / cell_size));
    g.cells.reserve(static_cast<std::size_t>(g.n_rows) * static_cast<std::size_t>(g.n_cols));
    for (int r = 0; r < g.n_rows; ++r) {
        for (int c = 0; c < g.n_cols; ++c) {
            const double x0 = g.origin_x + c * cell_size;
            const double y0 = g.origin_y + r * cell_size;
            g.cells.push_back({r * g.n_cols + c, r, c, Rect{x0, y0, x0 + cell_size, y0 + cell_size}});
        }
    }
    return g;
}

}  // namespace gridres::geo
