#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lsched/channel.hpp"
#include "lsched/fsmc.hpp"

namespace lsched {

struct SimConfig {
    int K = 1000;            // user count; per-user rate is C / K
    long long T = 10000;     // slot count
    std::uint64_t seed = 1;
    double z0 = 1.0;         // noise spectral density
    double spectral_efficiency = 0.5;
    FadingModel fading{};
    PathLossModel path_loss{};
    ThresholdTable table;    // carries the state space
    double nu_d = 0.02;
    int energy_batches = 20;  // time batches for the energy error bar
};

struct UserState {
    double s = 1.0;       // per-user path loss, drawn once
    int queue = 0;        // buffered packets (<= B)
    int drop_streak = 0;  // consecutive drops while the buffer is full
    int p = 0;            // chain state: queue + drop_streak
};

struct Estimate {
    double value = 0.0;
    double half_width = 0.0;  // 95% normal-approximation half-width
};

struct SimReport {
    Estimate theta_hat;  // empirical drop rate
    Estimate gamma_hat;  // empirical continuity-violation rate
    double energy_per_scheduled_bit_db = 0.0;
    double energy_per_delivered_bit_db = 0.0;
    double energy_db_half_width = 0.0;  // 95%, batch-based, scheduled-bit
    std::vector<double> state_occupancy;    // sums to 1
    std::vector<double> occupancy_stderr;   // 1-sigma per state
    std::vector<std::vector<double>> transition_freq;  // empirical Q
    long long total_user_slots = 0;
    long long scheduled_packets = 0;
    long long delivered_packets = 0;
    long long drops = 0;
    long long violations = 0;
};

// Successive-decoding energy of one slot: sort ascending by channel gain,
// then charge each entry (z0/h) * (2^(cumulative rate) - 2^(previous
// cumulative rate)).  Empty input costs zero energy.
double sic_energy(std::vector<std::pair<double, double>> scheduled,
                  double z0);

// Packet-level Monte Carlo of K users over T slots under the threshold
// policy, with one fading draw per user-slot and one success draw per
// attempted transmission (all packets of a slot share both draws).
SimReport run(const SimConfig& cfg);

// Largest absolute deviation between empirical occupancy and pi.
double occupancy_check(const SimReport& report,
                       const std::vector<double>& pi);

}  // namespace lsched
