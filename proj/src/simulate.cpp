#include "lsched/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lsched/errors.hpp"
#include "lsched/rng.hpp"

namespace lsched {

namespace {

constexpr double kZ95 = 1.959963984540054;  // 95% two-sided normal quantile

double sample_stderr(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

void check_config(const SimConfig& cfg) {
    if (cfg.K < 1) throw ConfigError("sim: K must be >= 1");
    if (cfg.T < 1) throw ConfigError("sim: T must be >= 1");
    if (!(cfg.z0 > 0.0)) throw ConfigError("sim: Z0 must be > 0");
    if (!(cfg.spectral_efficiency > 0.0))
        throw ConfigError("sim: spectral efficiency must be > 0");
    if (!(cfg.nu_d >= 0.0 && cfg.nu_d <= 1.0))
        throw ConfigError("sim: nu_d must lie in [0, 1]");
    if (cfg.energy_batches < 1 ||
        static_cast<long long>(cfg.energy_batches) > cfg.T)
        throw ConfigError("sim: energy_batches must lie in [1, T]");
    const StateSpace& sp = cfg.table.space;
    const auto n = static_cast<std::size_t>(sp.num_states());
    if (cfg.table.kappa.size() != n)
        throw ConfigError("sim: threshold table does not match state space");
    for (int p = 0; p <= sp.M; ++p) {
        if (cfg.table.kappa[static_cast<std::size_t>(p)].size() !=
            static_cast<std::size_t>(sp.mu(p) + 1))
            throw ConfigError(
                "sim: threshold row size mismatch at state " +
                std::to_string(p));
    }
}

}  // namespace

double sic_energy(std::vector<std::pair<double, double>> scheduled,
                  double z0) {
    if (scheduled.empty()) return 0.0;
    if (!(z0 > 0.0)) throw DomainError("sic_energy: Z0 must be > 0");
    for (const auto& [h, r] : scheduled) {
        if (!(h > 0.0)) throw DomainError("sic_energy: gains must be > 0");
        if (!(r > 0.0)) throw DomainError("sic_energy: rates must be > 0");
    }
    std::stable_sort(
        scheduled.begin(), scheduled.end(),
        [](const auto& a, const auto& b) { return a.first < b.first; });
    double cum = 0.0;
    double prev = 1.0;  // 2^0
    double energy = 0.0;
    for (const auto& [h, r] : scheduled) {
        cum += r;
        const double cur = std::exp2(cum);
        energy += z0 / h * (cur - prev);
        prev = cur;
    }
    return energy;
}

SimReport run(const SimConfig& cfg) {
    check_config(cfg);
    const StateSpace& sp = cfg.table.space;
    const int n_states = sp.num_states();
    const double rate = cfg.spectral_efficiency / static_cast<double>(cfg.K);
    Rng rng(cfg.seed);

    std::vector<UserState> users(static_cast<std::size_t>(cfg.K));
    for (auto& u : users) {
        u.s = cfg.path_loss.inverse_cdf(rng.uniform());
    }

    const auto uk = static_cast<std::size_t>(cfg.K);
    std::vector<long long> user_drops(uk, 0), user_viol(uk, 0);
    std::vector<std::vector<long long>> user_occ(
        uk, std::vector<long long>(static_cast<std::size_t>(n_states), 0));
    std::vector<std::vector<long long>> trans(
        static_cast<std::size_t>(n_states),
        std::vector<long long>(static_cast<std::size_t>(n_states), 0));

    long long scheduled_packets = 0, delivered_packets = 0;
    long long drops = 0, violations = 0;
    double total_energy = 0.0;
    std::vector<double> batch_energy(
        static_cast<std::size_t>(cfg.energy_batches), 0.0);
    std::vector<double> batch_bits(
        static_cast<std::size_t>(cfg.energy_batches), 0.0);

    std::vector<std::pair<double, double>> slot_sched;
    slot_sched.reserve(uk);
    struct Pending {
        int q = 0;
        int L = 0;
    };
    std::vector<Pending> pending(uk);

    for (long long t = 0; t < cfg.T; ++t) {
        const auto batch = static_cast<std::size_t>(
            t * cfg.energy_batches / cfg.T);
        slot_sched.clear();
        long long slot_packets = 0;

        // First pass: decisions and energy (energy is charged for every
        // scheduled packet, before the success draw resolves).
        for (std::size_t k = 0; k < uk; ++k) {
            UserState& u = users[k];
            ++user_occ[k][static_cast<std::size_t>(u.p)];
            const double f = cfg.fading.inverse_cdf(rng.uniform());
            const auto [q, L] = decide(u.p, f, cfg.table);
            pending[k] = Pending{q, L};
            if (L > 0) {
                for (int i = 0; i < L; ++i)
                    slot_sched.emplace_back(u.s * f, rate);
                slot_packets += L;
            }
        }
        if (slot_packets > 0) {
            const double e = sic_energy(slot_sched, cfg.z0);
            total_energy += e;
            batch_energy[batch] += e;
            batch_bits[batch] += static_cast<double>(slot_packets) * rate;
            scheduled_packets += slot_packets;
        }

        // Second pass: resolve outcomes and advance the per-user chains.
        for (std::size_t k = 0; k < uk; ++k) {
            UserState& u = users[k];
            const int p_old = u.p;
            const auto [q, L] = pending[k];
            bool forward = true;
            if (L > 0) {
                const bool success = !rng.bernoulli(cfg.nu_d);
                if (success) {
                    delivered_packets += L;
                    u.queue = q;  // q <= B: buffered packets after service
                    u.drop_streak = 0;
                    forward = false;
                }
            }
            if (forward) {
                // No delivery this slot: buffer the arrival if room,
                // otherwise drop it and extend the streak.
                if (u.queue < sp.B) {
                    ++u.queue;
                } else {
                    ++drops;
                    ++user_drops[k];
                    if (p_old == sp.M) {
                        ++violations;
                        ++user_viol[k];
                    } else {
                        ++u.drop_streak;
                    }
                }
            }
            u.p = u.queue + u.drop_streak;
            ++trans[static_cast<std::size_t>(p_old)]
                   [static_cast<std::size_t>(u.p)];
        }
    }

    SimReport rep;
    const double total_slots =
        static_cast<double>(cfg.K) * static_cast<double>(cfg.T);
    rep.total_user_slots = static_cast<long long>(cfg.K) * cfg.T;
    rep.scheduled_packets = scheduled_packets;
    rep.delivered_packets = delivered_packets;
    rep.drops = drops;
    rep.violations = violations;

    const double t_slots = static_cast<double>(cfg.T);
    std::vector<double> per_user(uk);
    for (std::size_t k = 0; k < uk; ++k)
        per_user[k] = static_cast<double>(user_drops[k]) / t_slots;
    rep.theta_hat.value = static_cast<double>(drops) / total_slots;
    rep.theta_hat.half_width = kZ95 * sample_stderr(per_user);
    for (std::size_t k = 0; k < uk; ++k)
        per_user[k] = static_cast<double>(user_viol[k]) / t_slots;
    rep.gamma_hat.value = static_cast<double>(violations) / total_slots;
    rep.gamma_hat.half_width = kZ95 * sample_stderr(per_user);

    rep.state_occupancy.assign(static_cast<std::size_t>(n_states), 0.0);
    rep.occupancy_stderr.assign(static_cast<std::size_t>(n_states), 0.0);
    for (int p = 0; p < n_states; ++p) {
        const auto up = static_cast<std::size_t>(p);
        long long c = 0;
        for (std::size_t k = 0; k < uk; ++k) {
            c += user_occ[k][up];
            per_user[k] = static_cast<double>(user_occ[k][up]) / t_slots;
        }
        const double occ = static_cast<double>(c) / total_slots;
        rep.state_occupancy[up] = occ;
        // Per-user spread captures chain correlation; the binomial floor
        // keeps the error bar sane for states a short run barely visits.
        const double floor_se =
            std::sqrt(std::max(occ * (1.0 - occ), 1e-300) / total_slots);
        rep.occupancy_stderr[up] =
            std::max(sample_stderr(per_user), floor_se);
    }

    rep.transition_freq.assign(
        static_cast<std::size_t>(n_states),
        std::vector<double>(static_cast<std::size_t>(n_states), 0.0));
    for (int p = 0; p < n_states; ++p) {
        const auto up = static_cast<std::size_t>(p);
        long long row = 0;
        for (int q = 0; q < n_states; ++q)
            row += trans[up][static_cast<std::size_t>(q)];
        if (row == 0) continue;
        for (int q = 0; q < n_states; ++q) {
            rep.transition_freq[up][static_cast<std::size_t>(q)] =
                static_cast<double>(trans[up][static_cast<std::size_t>(q)]) /
                static_cast<double>(row);
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (scheduled_packets > 0) {
        const double sched_bits = static_cast<double>(scheduled_packets) * rate;
        const double ratio = total_energy / sched_bits;
        rep.energy_per_scheduled_bit_db = 10.0 * std::log10(ratio);
        rep.energy_per_delivered_bit_db =
            delivered_packets > 0
                ? 10.0 * std::log10(total_energy /
                                    (static_cast<double>(delivered_packets) *
                                     rate))
                : nan;
        std::vector<double> batch_ratio;
        batch_ratio.reserve(batch_energy.size());
        for (std::size_t b = 0; b < batch_energy.size(); ++b) {
            if (batch_bits[b] > 0.0)
                batch_ratio.push_back(batch_energy[b] / batch_bits[b]);
        }
        const double se = sample_stderr(batch_ratio);
        rep.energy_db_half_width =
            kZ95 * 10.0 / std::log(10.0) * se / ratio;
    } else {
        rep.energy_per_scheduled_bit_db = nan;
        rep.energy_per_delivered_bit_db = nan;
        rep.energy_db_half_width = nan;
    }
    return rep;
}

double occupancy_check(const SimReport& report,
                       const std::vector<double>& pi) {
    if (report.state_occupancy.size() != pi.size())
        throw ConfigError(
            "occupancy_check: occupancy and pi have different lengths");
    double dev = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i)
        dev = std::max(dev, std::abs(report.state_occupancy[i] - pi[i]));
    return dev;
}

}  // namespace lsched
