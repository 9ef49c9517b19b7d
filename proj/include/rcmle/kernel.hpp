#ifndef RCMLE_KERNEL_HPP
#define RCMLE_KERNEL_HPP

#include <span>
#include <vector>

#include "rcmle/model.hpp"
#include "rcmle/objective.hpp"

namespace rcmle {

enum class Taper { Cosine, Quadratic };

Taper taper_from_name(const std::string& name);

/// Ramp-filtered convolution kernel in the scaled offset variable
/// u = (b . theta - s) / h. Defined through its frequency representation
/// K_hat(t) = |t| * w(t / t_max) with a smooth taper w (w(0)=1, w(+-1)=0),
/// tabulated once by numerical inverse Fourier transform.
class FilterKernel {
public:
    static FilterKernel build(Taper taper, double t_max = 8.0,
                              double u_max = 60.0, double du = 0.002);

    /// Linear interpolation in the table; zero outside its range.
    double operator()(double u) const;

    /// Trapezoid integral of K over the table range. The full-line integral
    /// is 0 (K_hat(0) = 0), but K has -1/(pi u^2) tails, so truncation at
    /// u_max leaves approximately +2/(pi u_max).
    double integral() const;

    Taper taper() const { return taper_; }
    double u_max() const { return u_max_; }

private:
    Taper taper_ = Taper::Cosine;
    double u_max_ = 0.0;
    double du_ = 0.0;
    std::vector<double> table_;  // K on [0, u_max]; K is even
};

/// 1-D Gaussian KDE over observation angles phi = atan2(theta_1, theta_0)
/// in (-pi/2, pi/2]; the divisor in the back-projection weighting.
class AngleDensity {
public:
    /// Rule-of-thumb bandwidth 1.06 * sd(phi) * n^(-1/5). Precomputes an
    /// evaluation table so lookups are O(1).
    static AngleDensity fit(std::span<const Line2D> lines);

    double operator()(double phi) const;
    double bandwidth() const { return bandwidth_; }

    /// Evaluations floored at this when used as a divisor.
    static constexpr double kFloor = 1e-3;

private:
    double bandwidth_ = 0.0;
    double lo_ = 0.0;
    double dphi_ = 0.0;
    std::vector<double> table_;
};

/// Filtered back-projection estimate: ramp-filtered kernel in the offset,
/// inverse design-density weighting, negatives truncated, renormalized to
/// unit discrete integral.
DensityEstimate kernel_estimate(std::span<const Observation> observations,
                                const Grid2D& grid, double h,
                                const FilterKernel& filter,
                                const AngleDensity& angle_density);

struct OracleBandwidth {
    double h = 0.0;
    double ise = 0.0;
    std::vector<double> ise_per_h;
};

/// Minimum-ISE bandwidth against a known truth (simulation use only);
/// ties break toward the larger h.
OracleBandwidth oracle_bandwidth(std::span<const Observation> observations,
                                 const Grid2D& grid,
                                 std::span<const double> truth_values,
                                 std::span<const double> h_grid,
                                 const FilterKernel& filter);

/// Default bandwidth search grid: geometric points on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int count);

} // namespace rcmle

#endif
