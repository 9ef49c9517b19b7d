#ifndef RCMLE_OBJECTIVE_HPP
#define RCMLE_OBJECTIVE_HPP

#include <span>
#include <string>
#include <vector>

#include "rcmle/geometry.hpp"

namespace rcmle {

/// Line integrals below this are clamped inside log so the objective stays
/// finite when an iterate puts no mass on some observation's cells.
constexpr double kLogClamp = 1e-12;

/// Discretized density on a grid: nonnegative with unit discrete integral.
struct DensityEstimate {
    std::vector<double> values;
    Grid2D grid;

    /// Max violation of {f >= 0, sum f_j * cell_area = 1}.
    double feasibility_error() const;
};

enum class RegularizerKind { L2, SobolevH1, SobolevH2, Entropy };

RegularizerKind regularizer_from_name(const std::string& name);
std::string regularizer_name(RegularizerKind kind);

struct RegularizerSpec {
    RegularizerKind kind = RegularizerKind::L2;
    double alpha = 0.0;
};

struct NllEval {
    double value = 0.0;
    std::vector<double> gradient;
    int clamped = 0;  // observations whose line integral hit the clamp
};

/// Negative average log-likelihood -(1/n) sum_i log(a_i . f) and its
/// gradient, with clamped line integrals.
NllEval neg_avg_loglik(const LineOperator& op, std::span<const double> f);

struct FuncEval {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Penalty functionals scaled by cell area so values approximate their
/// continuum counterparts and alpha transfers across grid resolutions.
/// Sobolev terms use forward differences with zero padding outside the grid.
FuncEval regularizer(RegularizerKind kind, const Grid2D& grid,
                     std::span<const double> f);

struct ObjectiveValue {
    double total = 0.0;
    double nll = 0.0;
    double penalty = 0.0;
    std::vector<double> gradient;
    int clamped = 0;
};

ObjectiveValue objective(const LineOperator& op, const RegularizerSpec& spec,
                         const Grid2D& grid, std::span<const double> f);

} // namespace rcmle

#endif
