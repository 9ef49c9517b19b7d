#include "rcmle/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "rcmle/model.hpp"

namespace rcmle {

std::vector<double> project_simplex(std::span<const double> v, double cell_area) {
    // Projection onto {f >= 0, c^T f = 1} with c = cell_area * 1:
    // f_j = max(v_j - lambda * cell_area, 0) with lambda from the
    // sort-and-threshold rule.
    const std::size_t m = v.size();
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());

    double cumsum = 0.0;
    double lambda = 0.0;
    for (std::size_t rho = 1; rho <= m; ++rho) {
        cumsum += sorted[rho - 1];
        const double cand = (cell_area * cumsum - 1.0) /
                            (static_cast<double>(rho) * cell_area * cell_area);
        if (sorted[rho - 1] - cand * cell_area > 0.0)
            lambda = cand;
        else
            break;
    }
    std::vector<double> f(m);
    for (std::size_t j = 0; j < m; ++j)
        f[j] = std::max(v[j] - lambda * cell_area, 0.0);
    return f;
}

double kkt_residual(const LineOperator& op, const RegularizerSpec& spec,
                    const Grid2D& grid, std::span<const double> f) {
    const ObjectiveValue obj = objective(op, spec, grid, f);
    std::vector<double> shifted(f.size());
    for (std::size_t j = 0; j < f.size(); ++j)
        shifted[j] = f[j] - obj.gradient[j];
    const std::vector<double> projected = project_simplex(shifted, grid.cell_area);
    double residual = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j)
        residual = std::max(residual, std::abs(f[j] - projected[j]));
    return residual;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Power-iteration estimate of ||A||_2^2 for the sparse operator.
double operator_norm_sq(const LineOperator& op, std::size_t m) {
    Rng rng(42);
    std::vector<double> v(m);
    for (double& x : v) x = rng.uniform(0.5, 1.5);
    std::vector<double> av(op.rows.size());
    std::vector<double> atav(m);
    double norm_sq = 0.0;
    for (int it = 0; it < 25; ++it) {
        for (std::size_t i = 0; i < op.rows.size(); ++i) {
            double s = 0.0;
            for (const SparseEntry& e : op.rows[i])
                s += e.weight * v[static_cast<std::size_t>(e.cell)];
            av[i] = s;
        }
        std::fill(atav.begin(), atav.end(), 0.0);
        for (std::size_t i = 0; i < op.rows.size(); ++i)
            for (const SparseEntry& e : op.rows[i])
                atav[static_cast<std::size_t>(e.cell)] += e.weight * av[i];
        const double vn = std::sqrt(dot(atav, atav));
        if (vn == 0.0) return 1.0;
        norm_sq = vn / std::max(std::sqrt(dot(v, v)), 1e-300);
        for (std::size_t j = 0; j < m; ++j) v[j] = atav[j] / vn;
    }
    return norm_sq;
}

double min_line_integral(const LineOperator& op, std::span<const double> f) {
    double lo = std::numeric_limits<double>::infinity();
    for (const SparseRow& row : op.rows) {
        double s = 0.0;
        for (const SparseEntry& e : row)
            s += e.weight * f[static_cast<std::size_t>(e.cell)];
        lo = std::min(lo, s);
    }
    return std::max(lo, kLogClamp);
}

/// Curvature bound of alpha * R for the quadratic penalties.
double penalty_curvature(const RegularizerSpec& spec, const Grid2D& grid) {
    const double db = grid.cell_area;
    double curv = 2.0 * db;
    if (spec.kind == RegularizerKind::SobolevH1 ||
        spec.kind == RegularizerKind::SobolevH2)
        curv += 8.0 * db * (1.0 / (grid.delta[0] * grid.delta[0]) +
                            1.0 / (grid.delta[1] * grid.delta[1]));
    if (spec.kind == RegularizerKind::SobolevH2)
        curv += 32.0 * db * (1.0 / std::pow(grid.delta[0], 4) +
                             1.0 / std::pow(grid.delta[1], 4));
    return spec.alpha * curv;
}

void validate(const SolveOptions& opts) {
    if (opts.max_iters < 1) throw ConfigError("solve options: max_iters must be >= 1");
    if (!(opts.tol_rel_obj > 0.0)) throw ConfigError("solve options: tol_rel_obj must be > 0");
    if (!(opts.tol_kkt > 0.0)) throw ConfigError("solve options: tol_kkt must be > 0");
}

std::vector<double> initial_point(const SolveOptions& opts, const Grid2D& grid) {
    const std::size_t m = static_cast<std::size_t>(grid.num_cells());
    if (opts.initial) {
        if (opts.initial->size() != m)
            throw ConfigError("solve options: initial vector has wrong size");
        return project_simplex(*opts.initial, grid.cell_area);
    }
    return std::vector<double>(m, 1.0 / (static_cast<double>(m) * grid.cell_area));
}

bool stalled(const std::vector<double>& trace, double tol) {
    const std::size_t window = 10;
    if (trace.size() < window + 1) return false;
    const double now = trace.back();
    const double before = trace[trace.size() - 1 - window];
    return std::abs(before - now) <=
           tol * std::max({std::abs(now), std::abs(before), 1e-30});
}

SolveResult solve_projected_gradient(const LineOperator& op,
                                     const RegularizerSpec& spec,
                                     const Grid2D& grid,
                                     const SolveOptions& opts) {
    const std::size_t m = static_cast<std::size_t>(grid.num_cells());
    std::vector<double> f = initial_point(opts, grid);

    const double norm_sq = operator_norm_sq(op, m);
    const double n = static_cast<double>(op.rows.size());
    auto lipschitz = [&](const std::vector<double>& point) {
        const double c = min_line_integral(op, point);
        return norm_sq / (n * c * c) + penalty_curvature(spec, grid);
    };
    double step = 1.0 / lipschitz(f);

    SolveReport report;
    ObjectiveValue cur = objective(op, spec, grid, f);
    report.objective_trace.push_back(cur.total);

    std::vector<double> trial(m);
    int consecutive_backtracks = 0;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        report.iterations = iter + 1;

        bool moved = false;
        ObjectiveValue next;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < m; ++j)
                trial[j] = f[j] - step * cur.gradient[j];
            std::vector<double> candidate = project_simplex(trial, grid.cell_area);
            std::vector<double> delta(m);
            for (std::size_t j = 0; j < m; ++j) delta[j] = candidate[j] - f[j];
            const double slope = dot(cur.gradient, delta);
            next = objective(op, spec, grid, candidate);
            if (next.total <= cur.total + 1e-4 * std::min(slope, 0.0)) {
                f = std::move(candidate);
                moved = slope < 0.0 || next.total < cur.total;
                if (bt == 0) {
                    step *= 1.3;
                    consecutive_backtracks = 0;
                } else {
                    ++consecutive_backtracks;
                }
                break;
            }
            step *= 0.5;
        }
        if (consecutive_backtracks >= 5) {
            step = std::min(step, 1.0 / lipschitz(f));
            consecutive_backtracks = 0;
        }
        if (moved) cur = std::move(next);
        report.objective_trace.push_back(cur.total);
        report.clamp_count = cur.clamped;

        // Prox residual at unit step from the current gradient.
        std::vector<double> shifted(m);
        for (std::size_t j = 0; j < m; ++j) shifted[j] = f[j] - cur.gradient[j];
        std::vector<double> projected = project_simplex(shifted, grid.cell_area);
        double kkt = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            kkt = std::max(kkt, std::abs(f[j] - projected[j]));
        report.final_kkt = kkt;

        if (kkt <= opts.tol_kkt && stalled(report.objective_trace, opts.tol_rel_obj)) {
            report.converged = true;
            break;
        }
        if (!moved) {  // step shrank to nothing; no further progress possible
            report.converged = kkt <= opts.tol_kkt;
            break;
        }
    }
    report.final_objective = cur.total;
    return {DensityEstimate{std::move(f), grid}, std::move(report)};
}

SolveResult solve_mirror_descent(const LineOperator& op,
                                 const RegularizerSpec& spec,
                                 const Grid2D& grid,
                                 const SolveOptions& opts) {
    const std::size_t m = static_cast<std::size_t>(grid.num_cells());
    std::vector<double> f = initial_point(opts, grid);
    // Multiplicative updates need a strictly positive start.
    const double floor0 = 1e-10 / (static_cast<double>(m) * grid.cell_area);
    for (double& v : f) v = std::max(v, floor0);
    double mass = 0.0;
    for (double v : f) mass += v * grid.cell_area;
    for (double& v : f) v /= mass;

    SolveReport report;
    ObjectiveValue cur = objective(op, spec, grid, f);
    report.objective_trace.push_back(cur.total);

    double eta = 1.0 / (std::abs(cur.total) + 1.0);
    std::vector<double> candidate(m);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        report.iterations = iter + 1;

        bool moved = false;
        ObjectiveValue next;
        for (int bt = 0; bt < 60; ++bt) {
            double wmax = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j)
                wmax = std::max(wmax, -eta * cur.gradient[j]);
            double z = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                candidate[j] = f[j] * std::exp(-eta * cur.gradient[j] - wmax);
                z += candidate[j] * grid.cell_area;
            }
            for (std::size_t j = 0; j < m; ++j) candidate[j] /= z;
            next = objective(op, spec, grid, candidate);
            if (next.total < cur.total) {
                f = candidate;
                moved = true;
                if (bt == 0) eta *= 1.2;
                break;
            }
            eta *= 0.5;
        }
        if (moved) cur = std::move(next);
        report.objective_trace.push_back(cur.total);
        report.clamp_count = cur.clamped;

        std::vector<double> shifted(m);
        for (std::size_t j = 0; j < m; ++j) shifted[j] = f[j] - cur.gradient[j];
        std::vector<double> projected = project_simplex(shifted, grid.cell_area);
        double kkt = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            kkt = std::max(kkt, std::abs(f[j] - projected[j]));
        report.final_kkt = kkt;

        if (kkt <= opts.tol_kkt && stalled(report.objective_trace, opts.tol_rel_obj)) {
            report.converged = true;
            break;
        }
        if (!moved) {
            report.converged = kkt <= opts.tol_kkt;
            break;
        }
    }
    report.final_objective = cur.total;
    return {DensityEstimate{std::move(f), grid}, std::move(report)};
}

} // namespace

SolveResult solve(const LineOperator& op, const RegularizerSpec& spec,
                  const Grid2D& grid, const SolveOptions& opts) {
    validate(opts);
    if (op.rows.empty()) throw std::runtime_error("solve: empty operator");

    const auto start = std::chrono::steady_clock::now();
    SolveResult result =
        (spec.kind == RegularizerKind::Entropy ||
         opts.algorithm == Algorithm::MirrorDescent)
            ? solve_mirror_descent(op, spec, grid, opts)
            : solve_projected_gradient(op, spec, grid, opts);
    result.report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

} // namespace rcmle
