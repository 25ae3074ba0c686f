#include "lsched/vu.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lsched/errors.hpp"

namespace lsched {

namespace {

constexpr double kKnotMergeTol = 1e-13;
// Quantile range used to bracket the received-power grid of the fast
// evaluator; chosen well outside the load-fraction integration window so
// that interpolation never clamps.
constexpr double kPowerQuantileLo = 1e-9;
// Load-fraction integration window: the integrand is evaluated on a uniform
// grid over [kLoadClip, 1 - kLoadClip].
constexpr double kLoadClip = 1e-7;

}  // namespace

double VuSteps::cdf(double y) const {
    if (knots.empty() || y <= knots.front()) return 0.0;
    auto it = std::upper_bound(knots.begin(), knots.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
    const double c =
        cum[i] + weights[i] * (std::exp(-knots[i]) - std::exp(-y));
    return std::min(1.0, c / mass);
}

double VuSteps::quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0))
        throw DomainError("VuSteps::quantile: u must lie in [0, 1)");
    const double target = u * mass;
    auto it = std::upper_bound(cum.begin(), cum.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cum.begin());
    i = (i == 0) ? 0 : i - 1;
    const double tail =
        std::exp(-knots[i]) - (target - cum[i]) / weights[i];
    return -std::log(std::max(tail, 1e-300));
}

VuSteps vu_steps(const PolicyMatrix& policy, const std::vector<double>& pi,
                 const FadingModel& fading) {
    const auto table = recover_thresholds(policy, fading);
    std::vector<std::pair<double, double>> pts;  // (threshold, pi mass)
    for (int p = 0; p <= policy.space.M; ++p) {
        const double w = pi[static_cast<std::size_t>(p)];
        if (w <= 0.0) continue;
        for (double k : table.kappa[static_cast<std::size_t>(p)]) {
            if (std::isfinite(k)) pts.emplace_back(k, w);
        }
    }
    std::sort(pts.begin(), pts.end());

    VuSteps steps;
    std::vector<double> incr;
    for (const auto& [k, w] : pts) {
        if (!steps.knots.empty() &&
            k - steps.knots.back() <= kKnotMergeTol * (1.0 + k)) {
            incr.back() += w;
        } else {
            steps.knots.push_back(k);
            incr.push_back(w);
        }
    }
    if (steps.knots.empty()) {
        throw DegenerateDistributionError(
            "scheduled-fading distribution is empty: the policy never "
            "schedules a transmission");
    }
    const std::size_t K = steps.knots.size();
    steps.weights.resize(K);
    steps.cum.resize(K);
    double w_acc = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        w_acc += incr[i];
        steps.weights[i] = w_acc;
    }
    steps.cum[0] = 0.0;
    for (std::size_t i = 0; i + 1 < K; ++i) {
        steps.cum[i + 1] =
            steps.cum[i] + steps.weights[i] * (std::exp(-steps.knots[i]) -
                                               std::exp(-steps.knots[i + 1]));
    }
    steps.mass = steps.cum[K - 1] +
                 steps.weights[K - 1] * std::exp(-steps.knots[K - 1]);
    if (!(steps.mass > 0.0)) {
        throw DegenerateDistributionError(
            "scheduled-fading distribution has zero mass");
    }
    return steps;
}

namespace {

// Number of geometric grid points needed on [a, b] so that every trapezoid
// increment of density ~ scale * exp(-y) stays within ~1e-7 of the exact
// integral (increment error ~ h^3 * pdf / 12 with h growing like y).
std::size_t points_for_accuracy(double a, double b, double scale) {
    const double ystar = std::clamp(3.0, a, b);  // maximizes y^3 exp(-y)
    const double peak =
        std::max(scale * std::exp(-ystar) * ystar * ystar * ystar, 1e-300);
    const double dr = std::cbrt(12.0 * 1e-7 / peak);
    const double n = std::log(b / a) / std::log1p(dr) + 1.0;
    return static_cast<std::size_t>(
        std::clamp(std::ceil(n), 2.0, 1048576.0));
}

}  // namespace

DistributionGrid make_vu_distribution(const PolicyMatrix& policy,
                                      const std::vector<double>& pi,
                                      const FadingModel& fading,
                                      std::size_t grid_size) {
    if (grid_size < 64)
        throw DomainError("make_vu_distribution: grid_size too small");
    const VuSteps steps = vu_steps(policy, pi, fading);
    const double lo = steps.quantile(kGridQuantileLo);
    const double hi = steps.quantile(kGridQuantileHi);
    const std::size_t K = steps.knots.size();

    struct Segment {
        double a, b;
        std::size_t idx;
        double mass;
    };
    std::vector<Segment> segs;
    double clip_mass = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        const double a = std::max(steps.knots[i], lo);
        const double b = std::min(
            i + 1 < K ? steps.knots[i + 1]
                      : std::numeric_limits<double>::infinity(),
            hi);
        if (!(b > a)) continue;
        const double m =
            steps.weights[i] * (std::exp(-a) - std::exp(-b)) / steps.mass;
        segs.push_back({a, b, i, m});
        clip_mass += m;
    }
    if (segs.empty())
        throw DegenerateDistributionError(
            "scheduled-fading distribution collapsed to a point");

    DistributionGrid g;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const auto& seg = segs[s];
        const double scale = steps.weights[seg.idx] / steps.mass;
        std::size_t n = std::max<std::size_t>(
            {16, points_for_accuracy(seg.a, seg.b, scale),
             static_cast<std::size_t>(
                 std::llround(static_cast<double>(grid_size) * seg.mass /
                              clip_mass))});
        const auto ys = geometric_points(seg.a, seg.b, n);
        // Adjacent segments already meet at the shared knot, so the previous
        // piece's last point (left density limit) and this piece's first
        // point (right limit) form the duplicated jump on their own.  Only a
        // zero-mass band between two kept pieces needs explicit closing
        // points, with zero density matching the flat cdf across the gap.
        if (s > 0 && seg.a > segs[s - 1].b) {
            for (const double edge : {segs[s - 1].b, seg.a}) {
                g.support.push_back(edge);
                g.cdf_values.push_back(steps.cdf(edge));
                g.pdf_values.push_back(0.0);
            }
        }
        for (const double y : ys) {
            g.support.push_back(y);
            g.cdf_values.push_back(steps.cdf(y));
            g.pdf_values.push_back(scale * std::exp(-y));
        }
    }
    g.cdf_values.front() = std::min(g.cdf_values.front(), kGridQuantileLo);
    g.validate();
    return g;
}

EnergyResult energy_per_bit(const DistributionGrid& received_power,
                            double spectral_efficiency,
                            std::size_t u_points) {
    if (!(spectral_efficiency > 0.0))
        throw DomainError("energy_per_bit: spectral efficiency must be > 0");
    if (u_points < 16)
        throw DomainError("energy_per_bit: u_points too small");
    if (!(received_power.support.front() > 0.0))
        throw DivergentEnergyError(
            "received-power support touches zero: energy integral diverges");
    const double ulo = kLoadClip;
    const double uhi = 1.0 - kLoadClip;
    const double h = (uhi - ulo) / static_cast<double>(u_points - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < u_points; ++i) {
        const double u = ulo + h * static_cast<double>(i);
        const double x = received_power.quantile(u);
        if (!(x > 0.0))
            throw DivergentEnergyError(
                "received-power quantile reaches zero: energy integral "
                "diverges");
        const double f = std::exp2(spectral_efficiency * u) / x;
        sum += (i == 0 || i + 1 == u_points) ? 0.5 * f : f;
    }
    EnergyResult r;
    r.energy = std::log(2.0) * h * sum;
    if (!(std::isfinite(r.energy) && r.energy > 0.0))
        throw NumericalError("energy_per_bit: non-finite energy integral");
    r.energy_db = 10.0 * std::log10(r.energy);
    return r;
}

PolicyEvaluator::PolicyEvaluator(FadingModel fading, PathLossModel path_loss,
                                 double spectral_efficiency,
                                 PolicyEvaluatorOptions options)
    : fading_(fading),
      path_loss_(path_loss),
      spectral_efficiency_(spectral_efficiency),
      options_(options) {
    path_loss_.validate();
    if (path_loss_.alpha_pl != 2.0 || path_loss_.cell_radius != 1.0) {
        throw DomainError(
            "PolicyEvaluator: closed form requires path-loss exponent 2 and "
            "unit cell radius; use the grid-based pipeline otherwise");
    }
    if (!(spectral_efficiency_ > 0.0))
        throw DomainError("PolicyEvaluator: spectral efficiency must be > 0");
    if (options_.x_points < 64 || options_.u_points < 64)
        throw DomainError("PolicyEvaluator: grid resolutions too small");
}

EnergyResult PolicyEvaluator::energy(const PolicyMatrix& policy,
                                     const std::vector<double>& pi) const {
    const VuSteps steps = vu_steps(policy, pi, fading_);
    const double d2 = path_loss_.delta * path_loss_.delta;
    const double span = 1.0 - d2;
    const std::size_t K = steps.knots.size();

    std::vector<double> et(K), consts(K);
    for (std::size_t i = 0; i < K; ++i) {
        et[i] = std::exp(-steps.knots[i]);
        consts[i] = steps.cum[i] + steps.weights[i] * et[i];
    }

    const double xlo = steps.quantile(kPowerQuantileLo);
    const double xhi = steps.quantile(1.0 - kPowerQuantileLo) / d2;
    const auto xs = geometric_points(xlo, xhi, options_.x_points);

    // Received-power cdf P(x) = mean over t ~ U[d2, 1] of the scheduled
    // fading cdf at x*t, integrated segment by segment in closed form.
    std::vector<double> cdf(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double x = xs[j];
        const double exd = std::exp(-d2 * x);
        const double ex1 = std::exp(-x);
        double acc = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const double t_lo = steps.knots[i];
            if (t_lo >= x) break;  // later segments start above x*1
            const double t_hi =
                (i + 1 < K) ? steps.knots[i + 1]
                            : std::numeric_limits<double>::infinity();
            if (t_hi <= d2 * x) continue;  // fully below x*d2
            double a, ea, b, eb;
            if (t_lo <= d2 * x) {
                a = d2;
                ea = exd;
            } else {
                a = t_lo / x;
                ea = et[i];
            }
            if (t_hi >= x) {
                b = 1.0;
                eb = ex1;
            } else {
                b = t_hi / x;
                eb = et[i + 1];
            }
            acc += consts[i] * (b - a) - steps.weights[i] * (ea - eb) / x;
        }
        cdf[j] = std::clamp(acc / (steps.mass * span), 0.0, 1.0);
    }

    const double ulo = kLoadClip;
    const double uhi = 1.0 - kLoadClip;
    const double h = (uhi - ulo) / static_cast<double>(options_.u_points - 1);
    double sum = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < options_.u_points; ++i) {
        const double u = ulo + h * static_cast<double>(i);
        while (j + 2 < xs.size() && cdf[j + 1] < u) ++j;
        const double dc = cdf[j + 1] - cdf[j];
        const double x =
            dc > 0.0 ? xs[j] + (u - cdf[j]) / dc * (xs[j + 1] - xs[j])
                     : xs[j + 1];
        const double f = std::exp2(spectral_efficiency_ * u) / x;
        sum += (i == 0 || i + 1 == options_.u_points) ? 0.5 * f : f;
    }
    EnergyResult r;
    r.energy = std::log(2.0) * h * sum;
    if (!(std::isfinite(r.energy) && r.energy > 0.0))
        throw NumericalError("PolicyEvaluator: non-finite energy integral");
    r.energy_db = 10.0 * std::log10(r.energy);
    return r;
}

}  // namespace lsched
