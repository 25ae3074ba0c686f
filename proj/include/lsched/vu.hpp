#pragma once

#include <vector>

#include "lsched/channel.hpp"
#include "lsched/fsmc.hpp"

namespace lsched {

// Piecewise-exponential description of the fading seen by a scheduled
// packet: between consecutive knots the density is weight * exp(-y) (up to
// normalization by `mass`), with the step weights accumulating the
// stationary probability of every scheduling threshold crossed so far.
// Segment i spans [knots[i], knots[i+1]) (the last one extends to
// infinity); `cum[i]` is the unnormalized cdf at knots[i] and `mass` the
// total unnormalized mass, which equals the mean number of packets
// scheduled per slot.
struct VuSteps {
    std::vector<double> knots;
    std::vector<double> weights;
    std::vector<double> cum;
    double mass = 0.0;

    double cdf(double y) const;       // normalized
    double quantile(double u) const;  // normalized, u in [0, 1)
};

// Build the step description from a policy and its stationary distribution.
// Throws DegenerateDistributionError when the policy never schedules.
VuSteps vu_steps(const PolicyMatrix& policy, const std::vector<double>& pi,
                 const FadingModel& fading);

// Sampled grid of the scheduled-packet fading distribution.  Knots where
// the density jumps appear twice in the support (left limit then right
// limit) so that the grid captures the discontinuity.
DistributionGrid make_vu_distribution(const PolicyMatrix& policy,
                                      const std::vector<double>& pi,
                                      const FadingModel& fading,
                                      std::size_t grid_size = 2048);

struct EnergyResult {
    double energy = 0.0;     // linear energy-per-bit units
    double energy_db = 0.0;  // 10*log10(energy)
};

// Large-system energy per bit for a received-power distribution given on a
// grid: log(2) * integral over u in (0,1) of 2^(C u) / quantile(u) du,
// evaluated on a uniform u grid clipped away from the endpoints.  Throws
// DivergentEnergyError if the power support touches zero.
EnergyResult energy_per_bit(const DistributionGrid& received_power,
                            double spectral_efficiency,
                            std::size_t u_points = 4096);

struct PolicyEvaluatorOptions {
    std::size_t x_points = 1536;  // received-power grid resolution
    std::size_t u_points = 4096;  // load-fraction integration resolution
};

// Fast closed-form energy evaluation for the inverse-square path-loss law
// on the unit disk.  The received-power cdf is computed analytically from
// the piecewise-exponential fading steps (two exponentials per grid point),
// avoiding the generic product-distribution construction in the annealing
// hot loop.
class PolicyEvaluator {
public:
    PolicyEvaluator(FadingModel fading, PathLossModel path_loss,
                    double spectral_efficiency,
                    PolicyEvaluatorOptions options = {});

    EnergyResult energy(const PolicyMatrix& policy,
                        const std::vector<double>& pi) const;

private:
    FadingModel fading_;
    PathLossModel path_loss_;
    double spectral_efficiency_;
    PolicyEvaluatorOptions options_;
};

}  // namespace lsched
