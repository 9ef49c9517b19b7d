#ifndef RCMLE_LEPSKII_HPP
#define RCMLE_LEPSKII_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "rcmle/objective.hpp"
#include "rcmle/solver.hpp"

namespace rcmle {

/// Geometric regularization-parameter path: alpha_1 = c_l * ln(n) / sqrt(n),
/// alpha_{i+1} = ratio * alpha_i.
struct AlphaPath {
    double c_l = 1.0;
    double ratio = 1.5;
    int length = 12;
    long n = 0;
    std::vector<double> alphas;
};

AlphaPath alpha_path(long n, double c_l = 1.0, double ratio = 1.5,
                     int length = 12);

enum class PathNorm { L2Grid, SobolevH1Grid };

/// Discrete norm of f - g used to compare path estimates.
double path_distance(PathNorm norm, const Grid2D& grid,
                     std::span<const double> f, std::span<const double> g);

struct LepskiiOptions {
    PathNorm norm = PathNorm::L2Grid;
    double threshold_constant = 8.0;
    /// Noise-level scale in the threshold tau(i) = C * sigma * ratio^((1-i)/2).
    /// Non-positive means auto-calibrate from the two most-regularized
    /// estimates of this path.
    double sigma_scale = 0.0;
};

struct LepskiiResult {
    int selected_index = 0;  // 1-based position in the path
    std::vector<DensityEstimate> estimates;
    std::vector<SolveReport> reports;
    std::vector<std::vector<double>> distances;  // pairwise, full matrix
    std::vector<double> thresholds;
    double threshold_constant = 0.0;
    double sigma_scale = 0.0;
    bool no_admissible_beyond_first = false;

    const DensityEstimate& selected() const {
        return estimates[static_cast<std::size_t>(selected_index - 1)];
    }
    double selected_alpha(const AlphaPath& path) const {
        return path.alphas[static_cast<std::size_t>(selected_index - 1)];
    }
};

/// solve_fn(alpha, warm) fits one estimate; warm is the previous path
/// solution or nullptr.
using PathSolveFn = std::function<SolveResult(double alpha,
                                              const DensityEstimate* warm)>;

/// Balancing selection: the most-regularized index j whose estimate stays
/// within tau(i) of every less-regularized estimate i < j. Estimates are
/// computed from the largest alpha down with warm starts.
LepskiiResult select(const AlphaPath& path, const PathSolveFn& solve_fn,
                     const LepskiiOptions& opts = {});

} // namespace rcmle

#endif
