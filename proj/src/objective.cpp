#include "rcmle/objective.hpp"

#include <algorithm>
#include <cmath>

namespace rcmle {

double DensityEstimate::feasibility_error() const {
    double mass = 0.0;
    double neg = 0.0;
    for (double v : values) {
        mass += v * grid.cell_area;
        neg = std::min(neg, v);
    }
    return std::max(std::abs(mass - 1.0), -neg);
}

RegularizerKind regularizer_from_name(const std::string& name) {
    if (name == "l2") return RegularizerKind::L2;
    if (name == "h1") return RegularizerKind::SobolevH1;
    if (name == "h2") return RegularizerKind::SobolevH2;
    if (name == "entropy") return RegularizerKind::Entropy;
    throw ConfigError("unknown regularizer '" + name +
                      "' (expected l2, h1, h2, or entropy)");
}

std::string regularizer_name(RegularizerKind kind) {
    switch (kind) {
        case RegularizerKind::L2: return "l2";
        case RegularizerKind::SobolevH1: return "h1";
        case RegularizerKind::SobolevH2: return "h2";
        case RegularizerKind::Entropy: return "entropy";
    }
    return "?";
}

NllEval neg_avg_loglik(const LineOperator& op, std::span<const double> f) {
    NllEval eval;
    eval.gradient.assign(f.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(op.rows.size());
    for (const SparseRow& row : op.rows) {
        double integral = 0.0;
        for (const SparseEntry& e : row) {
            if (static_cast<std::size_t>(e.cell) >= f.size())
                throw std::runtime_error("neg_avg_loglik: operator/density size mismatch");
            integral += e.weight * f[static_cast<std::size_t>(e.cell)];
        }
        if (integral < kLogClamp) {
            integral = kLogClamp;
            ++eval.clamped;
        }
        eval.value -= inv_n * std::log(integral);
        const double scale = inv_n / integral;
        for (const SparseEntry& e : row)
            eval.gradient[static_cast<std::size_t>(e.cell)] -= scale * e.weight;
    }
    return eval;
}

namespace {

// Forward differences with zero padding on both sides: pairs
// (-1,0), (0,1), ..., (k-1,k) along each axis.
void add_first_diff(const Grid2D& grid, std::span<const double> f,
                    FuncEval& eval) {
    const double db = grid.cell_area;
    for (int axis = 0; axis < 2; ++axis) {
        const double inv_d = 1.0 / grid.delta[axis];
        const int n_along = grid.k[axis];
        const int n_across = grid.k[1 - axis];
        for (int across = 0; across < n_across; ++across) {
            auto at = [&](int along) -> double {
                if (along < 0 || along >= n_along) return 0.0;
                const int j = axis == 0 ? grid.index(along, across)
                                        : grid.index(across, along);
                return f[static_cast<std::size_t>(j)];
            };
            auto grad_at = [&](int along) -> double* {
                if (along < 0 || along >= n_along) return nullptr;
                const int j = axis == 0 ? grid.index(along, across)
                                        : grid.index(across, along);
                return &eval.gradient[static_cast<std::size_t>(j)];
            };
            for (int along = -1; along < n_along; ++along) {
                const double diff = (at(along + 1) - at(along)) * inv_d;
                eval.value += diff * diff * db;
                const double g = 2.0 * diff * inv_d * db;
                if (double* p = grad_at(along + 1)) *p += g;
                if (double* p = grad_at(along)) *p -= g;
            }
        }
    }
}

// Centered second differences with zero padding, evaluated wherever they
// touch a grid value.
void add_second_diff(const Grid2D& grid, std::span<const double> f,
                     FuncEval& eval) {
    const double db = grid.cell_area;
    for (int axis = 0; axis < 2; ++axis) {
        const double inv_d2 = 1.0 / (grid.delta[axis] * grid.delta[axis]);
        const int n_along = grid.k[axis];
        const int n_across = grid.k[1 - axis];
        for (int across = 0; across < n_across; ++across) {
            auto at = [&](int along) -> double {
                if (along < 0 || along >= n_along) return 0.0;
                const int j = axis == 0 ? grid.index(along, across)
                                        : grid.index(across, along);
                return f[static_cast<std::size_t>(j)];
            };
            auto grad_at = [&](int along) -> double* {
                if (along < 0 || along >= n_along) return nullptr;
                const int j = axis == 0 ? grid.index(along, across)
                                        : grid.index(across, along);
                return &eval.gradient[static_cast<std::size_t>(j)];
            };
            for (int along = -1; along <= n_along; ++along) {
                const double second =
                    (at(along + 1) - 2.0 * at(along) + at(along - 1)) * inv_d2;
                eval.value += second * second * db;
                const double g = 2.0 * second * inv_d2 * db;
                if (double* p = grad_at(along + 1)) *p += g;
                if (double* p = grad_at(along)) *p -= 2.0 * g;
                if (double* p = grad_at(along - 1)) *p += g;
            }
        }
    }
}

} // namespace

FuncEval regularizer(RegularizerKind kind, const Grid2D& grid,
                     std::span<const double> f) {
    FuncEval eval;
    eval.gradient.assign(f.size(), 0.0);
    const double db = grid.cell_area;

    if (kind == RegularizerKind::Entropy) {
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double v = f[j];
            if (v > 0.0) eval.value += v * std::log(v) * db;
            eval.gradient[j] = (1.0 + std::log(std::max(v, kLogClamp))) * db;
        }
        return eval;
    }

    for (std::size_t j = 0; j < f.size(); ++j) {
        eval.value += f[j] * f[j] * db;
        eval.gradient[j] = 2.0 * f[j] * db;
    }
    if (kind == RegularizerKind::SobolevH1 || kind == RegularizerKind::SobolevH2)
        add_first_diff(grid, f, eval);
    if (kind == RegularizerKind::SobolevH2)
        add_second_diff(grid, f, eval);
    return eval;
}

ObjectiveValue objective(const LineOperator& op, const RegularizerSpec& spec,
                         const Grid2D& grid, std::span<const double> f) {
    NllEval nll = neg_avg_loglik(op, f);
    ObjectiveValue out;
    out.nll = nll.value;
    out.clamped = nll.clamped;
    out.gradient = std::move(nll.gradient);
    if (spec.alpha != 0.0) {
        FuncEval reg = regularizer(spec.kind, grid, f);
        out.penalty = reg.value;
        for (std::size_t j = 0; j < f.size(); ++j)
            out.gradient[j] += spec.alpha * reg.gradient[j];
    } else {
        out.penalty = regularizer(spec.kind, grid, f).value;
    }
    out.total = out.nll + spec.alpha * out.penalty;
    return out;
}

} // namespace rcmle
