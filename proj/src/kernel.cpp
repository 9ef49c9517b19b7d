#include "rcmle/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rcmle/simulation.hpp"

namespace rcmle {

Taper taper_from_name(const std::string& name) {
    if (name == "cosine") return Taper::Cosine;
    if (name == "quadratic") return Taper::Quadratic;
    throw ConfigError("unknown taper '" + name + "' (expected cosine or quadratic)");
}

FilterKernel FilterKernel::build(Taper taper, double t_max, double u_max,
                                 double du) {
    if (!(t_max > 0.0) || !(u_max > 0.0) || !(du > 0.0))
        throw ConfigError("filter kernel: t_max, u_max, du must be > 0");

    FilterKernel k;
    k.taper_ = taper;
    k.u_max_ = u_max;
    k.du_ = du;

    // K(u) = (1/pi) * integral_0^t_max t * w(t/t_max) * cos(t u) dt,
    // Simpson quadrature with a cosine recurrence per table point.
    constexpr int kQuadIntervals = 4096;  // even
    const double dt = t_max / kQuadIntervals;
    std::vector<double> integrand(kQuadIntervals + 1);
    for (int i = 0; i <= kQuadIntervals; ++i) {
        const double t = i * dt;
        const double z = t / t_max;
        const double w = taper == Taper::Cosine
                             ? std::cos(0.5 * std::numbers::pi * z)
                             : 1.0 - z * z;
        double simpson = (i == 0 || i == kQuadIntervals) ? 1.0
                         : (i % 2 == 1)                  ? 4.0
                                                         : 2.0;
        integrand[static_cast<std::size_t>(i)] = simpson * t * w;
    }

    const std::size_t n_table = static_cast<std::size_t>(std::ceil(u_max / du)) + 1;
    k.table_.resize(n_table);
    for (std::size_t p = 0; p < n_table; ++p) {
        const double u = static_cast<double>(p) * du;
        const double c1 = std::cos(dt * u);
        double cos_prev = 1.0;       // cos(0)
        double cos_cur = c1;         // cos(dt u)
        double sum = integrand[0];   // i = 0 term
        for (int i = 1; i <= kQuadIntervals; ++i) {
            sum += integrand[static_cast<std::size_t>(i)] * cos_cur;
            const double cos_next = 2.0 * c1 * cos_cur - cos_prev;
            cos_prev = cos_cur;
            cos_cur = cos_next;
        }
        k.table_[p] = sum * dt / 3.0 / std::numbers::pi;
    }
    return k;
}

double FilterKernel::operator()(double u) const {
    const double a = std::abs(u);
    if (a >= u_max_) return 0.0;
    const double pos = a / du_;
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= table_.size()) return table_.back();
    return table_[i] * (1.0 - frac) + table_[i + 1] * frac;
}

double FilterKernel::integral() const {
    double s = 0.5 * (table_.front() + table_.back());
    for (std::size_t i = 1; i + 1 < table_.size(); ++i) s += table_[i];
    return 2.0 * s * du_;  // even function
}

AngleDensity AngleDensity::fit(std::span<const Line2D> lines) {
    if (lines.empty()) throw std::runtime_error("angle density: no observations");
    std::vector<double> angles;
    angles.reserve(lines.size());
    double mean = 0.0;
    for (const Line2D& line : lines) {
        const double phi = std::atan2(line.normal[1], line.normal[0]);
        angles.push_back(phi);
        mean += phi;
    }
    const double n = static_cast<double>(angles.size());
    mean /= n;
    double var = 0.0;
    for (double phi : angles) var += (phi - mean) * (phi - mean);
    var /= std::max(n - 1.0, 1.0);

    AngleDensity d;
    d.bandwidth_ = std::max(1.06 * std::sqrt(var) * std::pow(n, -0.2), 1e-6);

    constexpr std::size_t kBins = 4096;
    const double half_pi = 0.5 * std::numbers::pi;
    d.lo_ = -half_pi - 6.0 * d.bandwidth_;
    const double hi = half_pi + 6.0 * d.bandwidth_;
    d.dphi_ = (hi - d.lo_) / (kBins - 1);
    d.table_.assign(kBins, 0.0);

    const double inv_bw = 1.0 / d.bandwidth_;
    const double norm = inv_bw / (n * std::sqrt(2.0 * std::numbers::pi));
    const int reach = static_cast<int>(std::ceil(6.0 * d.bandwidth_ / d.dphi_));
    for (double a : angles) {
        const int center = static_cast<int>(std::lround((a - d.lo_) / d.dphi_));
        const int first = std::max(center - reach, 0);
        const int last = std::min(center + reach, static_cast<int>(kBins) - 1);
        for (int i = first; i <= last; ++i) {
            const double z = (d.lo_ + i * d.dphi_ - a) * inv_bw;
            d.table_[static_cast<std::size_t>(i)] += norm * std::exp(-0.5 * z * z);
        }
    }
    return d;
}

double AngleDensity::operator()(double phi) const {
    const double pos = (phi - lo_) / dphi_;
    if (pos <= 0.0) return table_.front();
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= table_.size()) return table_.back();
    const double frac = pos - static_cast<double>(i);
    return table_[i] * (1.0 - frac) + table_[i + 1] * frac;
}

DensityEstimate kernel_estimate(std::span<const Observation> observations,
                                const Grid2D& grid, double h,
                                const FilterKernel& filter,
                                const AngleDensity& angle_density) {
    if (!(h > 0.0)) throw ConfigError("bandwidth must be > 0");
    if (observations.empty()) throw std::runtime_error("kernel estimate: no data");

    struct Ray {
        std::array<double, 2> normal;
        double offset;
        double weight;  // inverse design density at the ray's angle
    };
    std::vector<Ray> rays;
    rays.reserve(observations.size());
    for (const Observation& obs : observations) {
        const Line2D line = line_from_observation(obs.y, obs.x);
        const double phi = std::atan2(line.normal[1], line.normal[0]);
        const double fphi = std::max(angle_density(phi), AngleDensity::kFloor);
        rays.push_back({line.normal, line.offset, 1.0 / fphi});
    }

    const double prefactor =
        1.0 / (4.0 * std::numbers::pi * static_cast<double>(rays.size()) * h * h);
    const double inv_h = 1.0 / h;

    DensityEstimate estimate;
    estimate.grid = grid;
    estimate.values.resize(static_cast<std::size_t>(grid.num_cells()));
    for (int j = 0; j < grid.num_cells(); ++j) {
        const auto b = grid.center(j);
        double s = 0.0;
        for (const Ray& ray : rays) {
            const double u =
                (b[0] * ray.normal[0] + b[1] * ray.normal[1] - ray.offset) * inv_h;
            s += filter(u) * ray.weight;
        }
        estimate.values[static_cast<std::size_t>(j)] =
            std::max(prefactor * s, 0.0);
    }

    double mass = 0.0;
    for (double v : estimate.values) mass += v * grid.cell_area;
    if (mass <= 0.0)
        throw std::runtime_error("kernel estimate: reconstruction vanished after truncation");
    for (double& v : estimate.values) v /= mass;
    return estimate;
}

OracleBandwidth oracle_bandwidth(std::span<const Observation> observations,
                                 const Grid2D& grid,
                                 std::span<const double> truth_values,
                                 std::span<const double> h_grid,
                                 const FilterKernel& filter) {
    if (h_grid.empty()) throw ConfigError("oracle bandwidth: empty h grid");

    std::vector<Line2D> lines;
    lines.reserve(observations.size());
    for (const Observation& obs : observations)
        lines.push_back(line_from_observation(obs.y, obs.x));
    const AngleDensity angle_density = AngleDensity::fit(lines);

    OracleBandwidth best;
    best.ise = std::numeric_limits<double>::infinity();
    best.ise_per_h.reserve(h_grid.size());
    for (double h : h_grid) {
        const DensityEstimate est =
            kernel_estimate(observations, grid, h, filter, angle_density);
        const double err = ise(est, truth_values);
        best.ise_per_h.push_back(err);
        if (err <= best.ise) {  // ties break toward the larger h
            best.ise = err;
            best.h = h;
        }
    }
    return best;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 1)
        throw ConfigError("geometric grid: need 0 < lo < hi and count >= 1");
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = lo;
        return grid;
    }
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    return grid;
}

} // namespace rcmle
