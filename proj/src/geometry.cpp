#include "rcmle/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rcmle {

Grid2D build_grid(std::array<double, 2> lo, std::array<double, 2> hi,
                  std::array<int, 2> k) {
    for (int a = 0; a < 2; ++a) {
        if (!(lo[a] < hi[a]))
            throw ConfigError("grid bounds: lo[" + std::to_string(a) +
                              "] must be < hi[" + std::to_string(a) + "]");
        if (k[a] < 2)
            throw ConfigError("grid cells: k[" + std::to_string(a) +
                              "] must be >= 2");
    }
    Grid2D g;
    g.lo = lo;
    g.hi = hi;
    g.k = k;
    g.delta = {(hi[0] - lo[0]) / k[0], (hi[1] - lo[1]) / k[1]};
    g.cell_area = g.delta[0] * g.delta[1];
    return g;
}

Line2D line_from_observation(double y, std::span<const double> x) {
    if (x.size() != 2)
        throw ConfigError("observation: expected exactly 2 regressor components");
    const double norm = std::hypot(x[0], x[1]);
    if (norm == 0.0)
        throw std::runtime_error("degenerate observation: regressor vector is zero");
    Line2D line;
    line.normal = {x[0] / norm, x[1] / norm};
    line.offset = y / norm;
    // canonical orientation: first nonzero component of the normal positive
    const bool flip = line.normal[0] < 0.0 ||
                      (line.normal[0] == 0.0 && line.normal[1] < 0.0);
    if (flip) {
        line.normal = {-line.normal[0], -line.normal[1]};
        line.offset = -line.offset;
    }
    return line;
}

SparseRow trace_line(const Grid2D& grid, const Line2D& line) {
    // Parametrize as p(t) = offset * normal + t * dir with unit dir, so
    // segment lengths equal parameter increments.
    const std::array<double, 2> p0 = {line.offset * line.normal[0],
                                      line.offset * line.normal[1]};
    const std::array<double, 2> dir = {-line.normal[1], line.normal[0]};

    // Clip to the grid rectangle.
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 2; ++a) {
        if (dir[a] != 0.0) {
            double ta = (grid.lo[a] - p0[a]) / dir[a];
            double tb = (grid.hi[a] - p0[a]) / dir[a];
            if (ta > tb) std::swap(ta, tb);
            t_lo = std::max(t_lo, ta);
            t_hi = std::min(t_hi, tb);
        } else if (p0[a] < grid.lo[a] || p0[a] > grid.hi[a]) {
            return {};
        }
    }
    const double min_len = 1e-12 * std::min(grid.delta[0], grid.delta[1]);
    if (!(t_hi - t_lo > min_len)) return {};

    auto cell_of = [&](double coord, int a) {
        int i = static_cast<int>(std::floor((coord - grid.lo[a]) / grid.delta[a]));
        return std::clamp(i, 0, grid.k[a] - 1);
    };

    // Start at the entry point; step to the nearest cell boundary per axis.
    std::array<int, 2> idx;
    std::array<int, 2> step;
    std::array<double, 2> t_next;   // parameter of next boundary crossing
    std::array<double, 2> t_delta;  // parameter advance per cell along axis
    for (int a = 0; a < 2; ++a) {
        idx[a] = cell_of(p0[a] + t_lo * dir[a], a);
        if (dir[a] > 0.0) {
            step[a] = 1;
            const double edge = grid.lo[a] + (idx[a] + 1) * grid.delta[a];
            t_next[a] = (edge - p0[a]) / dir[a];
            t_delta[a] = grid.delta[a] / dir[a];
        } else if (dir[a] < 0.0) {
            step[a] = -1;
            const double edge = grid.lo[a] + idx[a] * grid.delta[a];
            t_next[a] = (edge - p0[a]) / dir[a];
            t_delta[a] = -grid.delta[a] / dir[a];
        } else {
            step[a] = 0;
            t_next[a] = std::numeric_limits<double>::infinity();
            t_delta[a] = std::numeric_limits<double>::infinity();
        }
    }

    SparseRow row;
    double t = t_lo;
    while (t < t_hi - min_len) {
        const int a = (t_next[0] <= t_next[1]) ? 0 : 1;
        const double t_stop = std::min(t_next[a], t_hi);
        const double len = t_stop - t;
        if (len > min_len)
            row.push_back({grid.index(idx[0], idx[1]), len});
        t = t_stop;
        if (t_stop >= t_hi) break;
        idx[a] += step[a];
        if (idx[a] < 0 || idx[a] >= grid.k[a]) break;
        t_next[a] += t_delta[a];
    }
    return row;
}

LineOperator build_operator_from_lines(const Grid2D& grid,
                                       std::span<const Line2D> lines) {
    if (lines.empty())
        throw std::runtime_error("build_operator: empty observation list");
    LineOperator op;
    op.rows.reserve(lines.size());
    for (const Line2D& line : lines) {
        SparseRow row = trace_line(grid, line);
        if (row.empty())
            ++op.dropped_count;
        else
            op.rows.push_back(std::move(row));
    }
    if (op.rows.empty())
        throw std::runtime_error(
            "build_operator: every observation line misses the grid; "
            "estimation impossible (check grid bounds)");
    return op;
}

LineOperator build_operator(const Grid2D& grid,
                            std::span<const Observation> observations) {
    std::vector<Line2D> lines;
    lines.reserve(observations.size());
    for (const Observation& obs : observations)
        lines.push_back(line_from_observation(obs.y, obs.x));
    return build_operator_from_lines(grid, lines);
}

} // namespace rcmle
