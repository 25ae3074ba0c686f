#pragma once

#include <cstddef>
#include <vector>

#include "lsched/errors.hpp"

namespace lsched {

// Small-scale fading law.  Only the unit-mean exponential is implemented;
// the enumeration is the extension point for other laws.
struct FadingModel {
    enum class Kind { exponential_unit_mean };
    Kind kind = Kind::exponential_unit_mean;

    double cdf(double x) const;
    double pdf(double x) const;
    double inverse_cdf(double u) const;  // smallest x with cdf(x) >= u
};

double fading_cdf(const FadingModel& model, double x);
double fading_inverse_cdf(const FadingModel& model, double u);

// Path loss of a user placed uniformly by area on the annulus
// [delta, cell_radius]: s = d^(-alpha_pl).  Unit cell radius only.
struct PathLossModel {
    double cell_radius = 1.0;
    double delta = 0.01;   // forbidden-region radius around the access point
    double alpha_pl = 2.0; // path-loss exponent

    void validate() const;
    double s_min() const { return 1.0; }
    double s_max() const;  // delta^(-alpha_pl)
    double cdf(double x) const;
    double pdf(double x) const;
    double inverse_cdf(double u) const;
};

// Tabulated cdf/pdf of a nonnegative random variable on a log-spaced grid.
// Support is nondecreasing; a repeated support point marks a pdf jump and
// carries the left/right limits on its two copies.
struct DistributionGrid {
    std::vector<double> support;
    std::vector<double> cdf_values;
    std::vector<double> pdf_values;

    std::size_t size() const { return support.size(); }
    double cdf(double x) const;       // linear interpolation, clamped outside
    double quantile(double u) const;  // inverse cdf by interpolation
    void validate() const;            // throws NumericalError on violation
};

// Log-spaced points from lo to hi inclusive (helper shared by builders).
std::vector<double> geometric_points(double lo, double hi, std::size_t n);

// Grid quantile coverage used by all builders: wide enough to satisfy the
// cdf tail requirements (first <= 1e-9, last >= 1 - 1e-6) with margin.
inline constexpr double kGridQuantileLo = 1e-10;
inline constexpr double kGridQuantileHi = 1.0 - 1e-8;

DistributionGrid fading_grid(const FadingModel& model,
                             std::size_t grid_size = 2048);

DistributionGrid path_loss_distribution(const PathLossModel& model,
                                        std::size_t grid_size = 2048);

// Distribution of the product of two independent nonnegative variables,
// computed by Stieltjes quadrature over b's grid.
DistributionGrid product_distribution(const DistributionGrid& a,
                                      const DistributionGrid& b,
                                      std::size_t grid_size = 2048);

// Numerically narrow point mass (relative width 1e-9) usable as either
// factor of product_distribution and as a degenerate channel.
DistributionGrid point_mass_grid(double x0);

}  // namespace lsched
