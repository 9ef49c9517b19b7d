#ifndef RCMLE_SOLVER_HPP
#define RCMLE_SOLVER_HPP

#include <optional>
#include <span>
#include <vector>

#include "rcmle/objective.hpp"

namespace rcmle {

enum class Algorithm { ProjectedGradient, MirrorDescent };

struct SolveOptions {
    int max_iters = 2000;
    /// Stop when the relative objective decrease over a 10-iteration window
    /// falls below this.
    double tol_rel_obj = 1e-9;
    double tol_kkt = 1e-6;
    std::optional<std::vector<double>> initial;  // default: uniform density
    Algorithm algorithm = Algorithm::ProjectedGradient;  // Entropy forces mirror descent
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> objective_trace;
    double final_objective = 0.0;
    double final_kkt = 0.0;
    int clamp_count = 0;
    bool converged = false;
    double wall_time_sec = 0.0;
};

/// Euclidean projection onto {f >= 0, sum f_j * cell_area = 1} by
/// sort-and-threshold, O(m log m).
std::vector<double> project_simplex(std::span<const double> v, double cell_area);

inline std::vector<double> project_simplex(std::span<const double> v,
                                           const Grid2D& grid) {
    return project_simplex(v, grid.cell_area);
}

/// sup-norm of f - P(f - grad F(f)); zero at a stationary point of the
/// constrained convex program.
double kkt_residual(const LineOperator& op, const RegularizerSpec& spec,
                    const Grid2D& grid, std::span<const double> f);

struct SolveResult {
    DensityEstimate estimate;
    SolveReport report;
};

/// Minimizes nll + alpha * R over the discrete probability simplex.
/// Projected gradient with Armijo backtracking for quadratic penalties,
/// entropic mirror descent (multiplicative updates) for the entropy penalty.
SolveResult solve(const LineOperator& op, const RegularizerSpec& spec,
                  const Grid2D& grid, const SolveOptions& opts = {});

} // namespace rcmle

#endif
