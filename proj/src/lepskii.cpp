#include "rcmle/lepskii.hpp"

#include <cmath>

namespace rcmle {

AlphaPath alpha_path(long n, double c_l, double ratio, int length) {
    if (n < 2) throw ConfigError("alpha path: n must be >= 2");
    if (!(c_l > 0.0)) throw ConfigError("alpha path: c_l must be > 0");
    if (!(ratio > 1.0)) throw ConfigError("alpha path: ratio must be > 1");
    if (length < 2) throw ConfigError("alpha path: length must be >= 2");
    AlphaPath path{c_l, ratio, length, n, {}};
    path.alphas.resize(static_cast<std::size_t>(length));
    path.alphas[0] = c_l * std::log(static_cast<double>(n)) /
                     std::sqrt(static_cast<double>(n));
    for (int i = 1; i < length; ++i)
        path.alphas[static_cast<std::size_t>(i)] =
            ratio * path.alphas[static_cast<std::size_t>(i - 1)];
    return path;
}

double path_distance(PathNorm norm, const Grid2D& grid,
                     std::span<const double> f, std::span<const double> g) {
    std::vector<double> diff(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) diff[j] = f[j] - g[j];
    const RegularizerKind kind = norm == PathNorm::L2Grid
                                     ? RegularizerKind::L2
                                     : RegularizerKind::SobolevH1;
    // The quadratic penalties evaluate exactly the squared discrete norms.
    return std::sqrt(regularizer(kind, grid, diff).value);
}

LepskiiResult select(const AlphaPath& path, const PathSolveFn& solve_fn,
                     const LepskiiOptions& opts) {
    const int m = path.length;
    LepskiiResult result;
    result.threshold_constant = opts.threshold_constant;
    result.estimates.resize(static_cast<std::size_t>(m));
    result.reports.resize(static_cast<std::size_t>(m));

    // Largest alpha first: smooth solutions converge fastest and warm-start
    // the rest of the path.
    const DensityEstimate* warm = nullptr;
    for (int i = m - 1; i >= 0; --i) {
        SolveResult fit = solve_fn(path.alphas[static_cast<std::size_t>(i)], warm);
        result.estimates[static_cast<std::size_t>(i)] = std::move(fit.estimate);
        result.reports[static_cast<std::size_t>(i)] = std::move(fit.report);
        warm = &result.estimates[static_cast<std::size_t>(i)];
    }

    const Grid2D& grid = result.estimates[0].grid;
    result.distances.assign(static_cast<std::size_t>(m),
                            std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double d = path_distance(opts.norm, grid,
                                           result.estimates[static_cast<std::size_t>(i)].values,
                                           result.estimates[static_cast<std::size_t>(j)].values);
            result.distances[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
            result.distances[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
        }

    double sigma = opts.sigma_scale;
    if (!(sigma > 0.0))
        sigma = result.distances[static_cast<std::size_t>(m - 2)]
                                [static_cast<std::size_t>(m - 1)];
    result.sigma_scale = sigma;

    result.thresholds.resize(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i)
        result.thresholds[static_cast<std::size_t>(i - 1)] =
            opts.threshold_constant * sigma *
            std::pow(path.ratio, 0.5 * (1.0 - static_cast<double>(i)));

    // j (1-based) is admissible if every less-regularized estimate i < j is
    // within tau(i); take the largest admissible j.
    int selected = 1;
    for (int j = 2; j <= m; ++j) {
        bool admissible = true;
        for (int i = 1; i < j && admissible; ++i)
            admissible = result.distances[static_cast<std::size_t>(i - 1)]
                                         [static_cast<std::size_t>(j - 1)] <=
                         result.thresholds[static_cast<std::size_t>(i - 1)];
        if (admissible) selected = j;
    }
    result.selected_index = selected;
    result.no_admissible_beyond_first = selected == 1;
    return result;
}

} // namespace rcmle
