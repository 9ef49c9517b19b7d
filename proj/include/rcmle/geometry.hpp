#ifndef RCMLE_GEOMETRY_HPP
#define RCMLE_GEOMETRY_HPP

#include <array>
#include <span>
#include <vector>

#include "rcmle/types.hpp"

namespace rcmle {

/// Rectangular grid of cell centers tiling [lo, hi]. Node ordering is
/// row-major with axis 0 fastest: j = i1 * k[0] + i0.
struct Grid2D {
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
    std::array<int, 2> k{};
    std::array<double, 2> delta{};  // (hi - lo) / k per axis
    double cell_area = 0.0;

    int num_cells() const { return k[0] * k[1]; }

    std::array<double, 2> center(int j) const {
        const int i0 = j % k[0];
        const int i1 = j / k[0];
        return {lo[0] + (i0 + 0.5) * delta[0], lo[1] + (i1 + 0.5) * delta[1]};
    }

    int index(int i0, int i1) const { return i1 * k[0] + i0; }
};

Grid2D build_grid(std::array<double, 2> lo, std::array<double, 2> hi,
                  std::array<int, 2> k);

/// The line {b : b . normal = offset}. normal is a unit vector stored in
/// canonical orientation: its first nonzero component is positive, so
/// (normal, offset) and (-normal, -offset) share one representative.
struct Line2D {
    std::array<double, 2> normal{};
    double offset = 0.0;
};

/// Normalizes an observation (y, x) with two regressor components to the
/// line {b : b . x = y} on the unit-normal parametrization.
Line2D line_from_observation(double y, std::span<const double> x);

struct SparseEntry {
    int cell;
    double weight;  // intersection length, > 0
};
using SparseRow = std::vector<SparseEntry>;

/// Exact lengths of line-within-cell intersections, by parametric cell
/// stepping. Entries shorter than 1e-12 * min(delta) are dropped.
SparseRow trace_line(const Grid2D& grid, const Line2D& line);

/// Sparse discretization of the line-integral operator: one row per
/// retained observation, weight = length of its line inside the cell.
struct LineOperator {
    std::vector<SparseRow> rows;
    int dropped_count = 0;

    int n_retained() const { return static_cast<int>(rows.size()); }
};

LineOperator build_operator(const Grid2D& grid,
                            std::span<const Observation> observations);

LineOperator build_operator_from_lines(const Grid2D& grid,
                                       std::span<const Line2D> lines);

} // namespace rcmle

#endif
