#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lsched/channel.hpp"
#include "lsched/errors.hpp"

namespace lsched {

// State space of the scheduling chain: states p = 0..M with M = B + N.
// State p decomposes as buffered packets i = min(p, B) plus successive
// drops j = p - i; mu(p) bounds the reachable scheduled-transition targets.
struct StateSpace {
    int B = 0;
    int N = 1;
    int M = 1;  // = B + N

    static StateSpace make(int B, int N);
    int mu(int p) const { return p < B ? p : B; }
    int num_states() const { return M + 1; }
    bool operator==(const StateSpace&) const = default;
};

// Scheduled-transition probabilities: row p holds alpha_hat[p][q] for
// q = 0..mu(p), the probability of scheduling into state q.  The residual
// 1 - sum_q alpha_hat[p][q] is the no-schedule (buffer/drop) probability.
struct PolicyMatrix {
    StateSpace space;
    double nu_d = 0.0;  // transmission-failure probability; nu_s = 1 - nu_d
    std::vector<std::vector<double>> alpha_hat;

    double nu_s() const { return 1.0 - nu_d; }
    double row_sum(int p) const;
    double residual(int p) const;  // clamped at 0
    void validate() const;         // throws InfeasiblePolicyError
};

// Full transition matrix and its scheduled / CSI-failure decomposition.
struct TransitionMatrix {
    StateSpace space;
    std::vector<std::vector<double>> q_full;
    std::vector<std::vector<double>> q_sched;
    std::vector<std::vector<double>> q_csi;
};

struct ChainSolution {
    std::vector<double> pi;
    double gamma = 0.0;    // continuity-violation probability
    double theta_r = 0.0;  // average packet drop rate
};

// Fading thresholds kappa[p][q], nonincreasing in q within a row
// (scheduling more packets requires better fading); +infinity marks a
// zero-probability band.
struct ThresholdTable {
    StateSpace space;
    std::vector<std::vector<double>> kappa;
};

// Invert the cumulative scheduling probabilities into fading thresholds:
// kappa[p][q] = inverse_cdf(1 - sum_{m<=q} alpha_hat[p][m]).
ThresholdTable recover_thresholds(const PolicyMatrix& policy,
                                  const FadingModel& fading);

// Scheduling decision for state p under fading f: target state q and the
// number of scheduled packets L (L = 0 means buffer/drop and move forward).
std::pair<int, int> decide(int p, double f, const ThresholdTable& table);

// Assemble Q = Q_s + Q_c with CSI failures (probability nu_d) folded into
// the forward/self transition of each row.
TransitionMatrix assemble(const PolicyMatrix& policy);

// Stationary distribution by direct linear solve.  A unique stationary
// distribution exists whenever exactly one closed communicating class is
// present; with two or more, throws ReducibleChainError naming them.
std::vector<double> steady_state(const TransitionMatrix& matrix);

double violation_probability(const PolicyMatrix& policy,
                             const std::vector<double>& pi);

double average_drop_rate(const PolicyMatrix& policy,
                         const std::vector<double>& pi);

// assemble + steady_state + both metrics in one call.
ChainSolution solve_chain(const PolicyMatrix& policy);

// Text fixture format: header line "B N nu_d", then one line per state with
// the row's probabilities at full precision.
std::string dump_policy(const PolicyMatrix& policy);
PolicyMatrix load_policy(const std::string& text);
PolicyMatrix load_policy_file(const std::string& path);

}  // namespace lsched
