#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsched/channel.hpp"
#include "lsched/fsmc.hpp"
#include "lsched/rng.hpp"
#include "lsched/vu.hpp"

namespace lsched {

// Channel-side inputs shared by every policy evaluation.
struct ChannelInputs {
    FadingModel fading{};
    PathLossModel path_loss{};
    double nu_d = 0.02;
    double spectral_efficiency = 0.5;
};

struct AnnealConfig {
    double t0 = 1.0;    // initial temperature on the dB energy scale
    double c_sa = 1.0;  // cooling constant
    int n_temps = 100;
    int proposals_per_temp = 0;  // <= 0 resolves to 50 * (M + 1)
    std::uint64_t seed = 1;
    double step_scale = 0.25;  // proposal magnitude at T = T0, in (0, 1]

    void validate() const;
    int resolved_proposals(const StateSpace& space) const;
};

struct ConstraintSet {
    double theta_tar = 0.3;          // average-drop budget
    std::optional<double> epsilon{};  // continuity bound; absent = off
    int B = 0;
    int N = 1;

    void validate() const;
};

// T_b = T0 / (c_sa * b + 1).
double cooling_temperature(const AnnealConfig& cfg, int b);

// Perturb one uniformly chosen row by a zero-mean step of magnitude
// step_scale * (T / T0), clip entries to [0, 1], and rescale the row if
// its sum exceeds 1.
PolicyMatrix propose(const PolicyMatrix& current, const AnnealConfig& cfg,
                     double temperature, Rng& rng);

struct FeasibilityReport {
    bool feasible = false;
    double gamma = 0.0;
    double theta_r = 0.0;
    std::vector<double> pi;
    std::string diagnostic;  // filled when the chain itself is unusable
};

// Assemble the chain, solve it, and test theta_r <= theta_tar plus (when
// epsilon is set) gamma <= epsilon.  A chain with several closed classes is
// reported infeasible with a diagnostic instead of throwing.
FeasibilityReport feasible(const PolicyMatrix& policy,
                           const ConstraintSet& cons);

struct TraceRow {
    int temp_index = 0;
    double temperature = 0.0;
    double best_energy_db = 0.0;
    double accept_rate = 0.0;
};

struct OptimizeOutcome {
    PolicyMatrix best_policy;
    EnergyResult best_energy{};
    double gamma = 0.0;
    double theta_r = 0.0;
    std::vector<double> pi;
    bool feasible_found = false;
    std::vector<TraceRow> trace;
};

// Simulated annealing over the policy space: feasible improving candidates
// are always accepted, feasible worsening ones with probability
// exp(-dE/T_b) (dE in dB), infeasible ones only consume their proposal
// slot.  Returns the best feasible policy seen; when none is found the
// initial policy is returned with feasible_found = false and best-effort
// metrics.
OptimizeOutcome optimize(const ConstraintSet& cons, const AnnealConfig& cfg,
                         const ChannelInputs& inputs);

struct GammaMaxResult {
    double gamma_m = 0.0;
    OptimizeOutcome outcome;
};

// Energy-optimal scheduling with the continuity bound switched off; the
// violation probability of the returned policy is the largest value the
// continuity bound ever needs (larger bounds cannot improve energy).
GammaMaxResult gamma_max(ConstraintSet cons, const AnnealConfig& cfg,
                         const ChannelInputs& inputs);

struct BufferRow {
    int B = 0;
    bool feasible_found = false;
    double energy_db = 0.0;
    double gamma = 0.0;
    double theta_r = 0.0;
};

struct BufferSearchResult {
    bool found = false;
    int b_star = -1;
    double baseline_energy_db = 0.0;
    std::vector<BufferRow> rows;
};

// Optimize for each candidate buffer size in increasing order and return
// the smallest one whose energy beats the smallest candidate's energy by
// at least delta_e_db while keeping gamma within epsilon.
BufferSearchResult buffer_search(std::vector<int> candidates,
                                 double delta_e_db, ConstraintSet cons,
                                 const AnnealConfig& cfg,
                                 const ChannelInputs& inputs);

struct GammaMinRow {
    double epsilon = 0.0;
    bool feasible_found = false;
    double gamma = 0.0;
    double energy_db = 0.0;
};

struct GammaMinResult {
    bool any_feasible = false;
    double gamma_0 = 1.0;  // smallest gamma achieved before infeasibility
    std::vector<GammaMinRow> rows;
};

// Probe the smallest reachable continuity bound by repeatedly halving
// epsilon until the optimizer stops finding feasible policies.
GammaMinResult gamma_min(ConstraintSet cons, const AnnealConfig& cfg,
                         const ChannelInputs& inputs, int max_halvings = 12);

// CSV with columns temp_index, temperature, best_energy_db, accept_rate.
void write_trace_csv(const std::string& path, const OptimizeOutcome& outcome);

}  // namespace lsched
