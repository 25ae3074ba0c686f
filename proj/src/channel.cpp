#include "lsched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lsched {

// ---------------------------------------------------------------- fading

double FadingModel::cdf(double x) const {
    if (x < 0.0) throw DomainError("fading cdf: x must be nonnegative");
    return -std::expm1(-x);  // 1 - e^(-x)
}

double FadingModel::pdf(double x) const {
    if (x < 0.0) throw DomainError("fading pdf: x must be nonnegative");
    return std::exp(-x);
}

double FadingModel::inverse_cdf(double u) const {
    if (u < 0.0 || u >= 1.0)
        throw DomainError("fading inverse_cdf: u must lie in [0, 1)");
    return -std::log1p(-u);
}

double fading_cdf(const FadingModel& model, double x) { return model.cdf(x); }

double fading_inverse_cdf(const FadingModel& model, double u) {
    return model.inverse_cdf(u);
}

// -------------------------------------------------------------- path loss

void PathLossModel::validate() const {
    if (cell_radius != 1.0)
        throw DomainError("path loss: cell radius is normalized to 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("path loss: delta must lie in (0, 1)");
    if (!(alpha_pl > 0.0))
        throw DomainError("path loss: exponent must be positive");
}

double PathLossModel::s_max() const { return std::pow(delta, -alpha_pl); }

double PathLossModel::cdf(double x) const {
    validate();
    if (x <= s_min()) return 0.0;
    if (x >= s_max()) return 1.0;
    // P(d^(-alpha) <= x) = P(d >= x^(-1/alpha)) with d^2 area-uniform.
    const double d2 = std::pow(x, -2.0 / alpha_pl);
    return (1.0 - d2) / (1.0 - delta * delta);
}

double PathLossModel::pdf(double x) const {
    validate();
    if (x < s_min() || x > s_max()) return 0.0;
    return (2.0 / alpha_pl) * std::pow(x, -2.0 / alpha_pl - 1.0) /
           (1.0 - delta * delta);
}

double PathLossModel::inverse_cdf(double u) const {
    validate();
    if (u < 0.0 || u > 1.0)
        throw DomainError("path loss inverse_cdf: u must lie in [0, 1]");
    const double d2 = 1.0 - u * (1.0 - delta * delta);
    return std::pow(d2, -alpha_pl / 2.0);
}

// ---------------------------------------------------------- grid queries

namespace {

// Index of the last support point <= x among strictly increasing runs;
// generic interpolation helper over (xs, ys) with clamping.
double interp_clamped(const std::vector<double>& xs,
                      const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double dx = xs[hi] - xs[lo];
    if (dx <= 0.0) return ys[hi];
    const double t = (x - xs[lo]) / dx;
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

// Density lookup: below the table the boundary value is the correct limit
// for the decreasing densities tabulated here, but above it the density has
// fallen below the table's resolution and must read as zero — clamping to
// the last value would smear a spurious constant tail into products.
double interp_pdf(const std::vector<double>& xs, const std::vector<double>& ys,
                  double x) {
    if (x > xs.back()) return 0.0;
    return interp_clamped(xs, ys, x);
}

}  // namespace

double DistributionGrid::cdf(double x) const {
    return interp_clamped(support, cdf_values, x);
}

double DistributionGrid::quantile(double u) const {
    if (u < 0.0 || u > 1.0)
        throw DomainError("quantile: u must lie in [0, 1]");
    if (u <= cdf_values.front()) return support.front();
    if (u >= cdf_values.back()) return support.back();
    auto it = std::lower_bound(cdf_values.begin(), cdf_values.end(), u);
    const std::size_t hi = static_cast<std::size_t>(it - cdf_values.begin());
    const std::size_t lo = hi - 1;
    const double dc = cdf_values[hi] - cdf_values[lo];
    if (dc <= 0.0) return support[hi];
    const double t = (u - cdf_values[lo]) / dc;
    return support[lo] + t * (support[hi] - support[lo]);
}

void DistributionGrid::validate() const {
    const std::size_t n = support.size();
    if (n < 2 || cdf_values.size() != n || pdf_values.size() != n)
        throw NumericalError("distribution grid: inconsistent sizes");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(support[i] > 0.0))
            throw NumericalError("distribution grid: support must be positive");
        if (pdf_values[i] < 0.0)
            throw NumericalError("distribution grid: negative pdf value");
        if (cdf_values[i] < 0.0 || cdf_values[i] > 1.0 + 1e-12)
            throw NumericalError("distribution grid: cdf outside [0, 1]");
        if (i > 0) {
            if (support[i] < support[i - 1])
                throw NumericalError("distribution grid: support not sorted");
            if (cdf_values[i] < cdf_values[i - 1] - 1e-15)
                throw NumericalError("distribution grid: cdf not nondecreasing");
        }
    }
    if (cdf_values.front() > 1e-9)
        throw NumericalError("distribution grid: cdf at support start exceeds 1e-9");
    if (cdf_values.back() < 1.0 - 1e-6)
        throw NumericalError("distribution grid: cdf at support end below 1 - 1e-6");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double trap =
            0.5 * (pdf_values[i] + pdf_values[i + 1]) * (support[i + 1] - support[i]);
        const double inc = cdf_values[i + 1] - cdf_values[i];
        // The trapezoid rule only approximates the cdf increment.  When the
        // pdf is monotone across a segment, both the true increment and the
        // trapezoid value lie between h*min(pdf) and h*max(pdf), so an
        // honest table can never disagree by more than the width of that
        // bracket; corrupted tables disagree by a multiple of the segment
        // mass in well-resolved regions, which the small relative cushion
        // still rejects.
        const double h = support[i + 1] - support[i];
        const double tol = 1e-7 + 0.05 * std::max(trap, inc) +
                           h * std::abs(pdf_values[i + 1] - pdf_values[i]);
        if (std::abs(trap - inc) > tol)
            throw NumericalError(
                "distribution grid: pdf/cdf mismatch of " +
                std::to_string(std::abs(trap - inc)) + " at segment " +
                std::to_string(i));
    }
}

// ------------------------------------------------------------- builders

std::vector<double> geometric_points(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 2)
        throw DomainError("geometric_points: need 0 < lo <= hi and n >= 2");
    std::vector<double> out(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = std::exp(llo + t * (lhi - llo));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

DistributionGrid fading_grid(const FadingModel& model, std::size_t grid_size) {
    if (grid_size < 16) throw DomainError("fading_grid: grid_size >= 16 required");
    const double lo = model.inverse_cdf(kGridQuantileLo);
    const double hi = model.inverse_cdf(kGridQuantileHi);
    DistributionGrid g;
    g.support = geometric_points(lo, hi, grid_size);
    g.cdf_values.resize(grid_size);
    g.pdf_values.resize(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        g.cdf_values[i] = model.cdf(g.support[i]);
        g.pdf_values[i] = model.pdf(g.support[i]);
    }
    return g;
}

DistributionGrid path_loss_distribution(const PathLossModel& model,
                                        std::size_t grid_size) {
    if (grid_size < 16)
        throw DomainError("path_loss_distribution: grid_size >= 16 required");
    model.validate();
    DistributionGrid g;
    g.support = geometric_points(model.s_min(), model.s_max(), grid_size);
    g.cdf_values.resize(grid_size);
    g.pdf_values.resize(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        g.cdf_values[i] = model.cdf(g.support[i]);
        g.pdf_values[i] = model.pdf(g.support[i]);
    }
    return g;
}

DistributionGrid product_distribution(const DistributionGrid& a,
                                      const DistributionGrid& b,
                                      std::size_t grid_size) {
    if (grid_size < 16)
        throw DomainError("product_distribution: grid_size >= 16 required");
    const double lo = a.quantile(kGridQuantileLo) * b.quantile(kGridQuantileLo);
    const double hi = a.quantile(kGridQuantileHi) * b.quantile(kGridQuantileHi);

    // Stieltjes quadrature over b's grid: for each output point x,
    //   cdf(x) = sum_i dF_b(i) * avg(F_a(x/s_i), F_a(x/s_{i+1}))
    //   pdf(x) = sum_i dF_b(i) * avg(p_a(x/s_i)/s_i, p_a(x/s_{i+1})/s_{i+1})
    DistributionGrid g;
    g.support = geometric_points(lo, hi, grid_size);
    g.cdf_values.assign(grid_size, 0.0);
    g.pdf_values.assign(grid_size, 0.0);
    const std::size_t nb = b.size();
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double x = g.support[j];
        double c = 0.0, p = 0.0;
        double fa_hi = a.cdf(x / b.support[0]);
        double pa_hi = interp_pdf(a.support, a.pdf_values, x / b.support[0]) /
                       b.support[0];
        for (std::size_t i = 0; i + 1 < nb; ++i) {
            const double w = b.cdf_values[i + 1] - b.cdf_values[i];
            const double fa_lo = fa_hi;
            const double pa_lo = pa_hi;
            fa_hi = a.cdf(x / b.support[i + 1]);
            pa_hi = interp_pdf(a.support, a.pdf_values, x / b.support[i + 1]) /
                    b.support[i + 1];
            if (w <= 0.0) continue;
            c += w * 0.5 * (fa_lo + fa_hi);
            p += w * 0.5 * (pa_lo + pa_hi);
        }
        g.cdf_values[j] = std::min(1.0, c);
        g.pdf_values[j] = p;
    }
    // Clamp away quadrature wobble at the tails.
    for (std::size_t j = 1; j < grid_size; ++j)
        g.cdf_values[j] = std::max(g.cdf_values[j], g.cdf_values[j - 1]);
    return g;
}

DistributionGrid point_mass_grid(double x0) {
    if (!(x0 > 0.0)) throw DomainError("point_mass_grid: x0 must be positive");
    constexpr std::size_t n = 17;
    const double w = 1e-9 * x0;
    DistributionGrid g;
    g.support = geometric_points(x0 - w, x0 + w, n);
    const double width = g.support.back() - g.support.front();
    g.cdf_values.resize(n);
    g.pdf_values.assign(n, 1.0 / width);
    for (std::size_t i = 0; i < n; ++i)
        g.cdf_values[i] = (g.support[i] - g.support.front()) / width;
    g.cdf_values.front() = 0.0;
    g.cdf_values.back() = 1.0;
    return g;
}

}  // namespace lsched
