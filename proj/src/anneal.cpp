#include "lsched/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lsched/errors.hpp"

namespace lsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

PolicyMatrix filled_policy(const StateSpace& sp, double nu_d, bool uniform) {
    PolicyMatrix pm;
    pm.space = sp;
    pm.nu_d = nu_d;
    pm.alpha_hat.resize(static_cast<std::size_t>(sp.num_states()));
    for (int p = 0; p <= sp.M; ++p) {
        auto& row = pm.alpha_hat[static_cast<std::size_t>(p)];
        row.assign(static_cast<std::size_t>(sp.mu(p) + 1), 0.0);
        if (uniform) {
            const double v = 1.0 / static_cast<double>(sp.mu(p) + 2);
            std::fill(row.begin(), row.end(), v);
        } else {
            row[0] = 1.0;  // schedule the maximal packet count
        }
    }
    return pm;
}

// Energy evaluation backend: closed form when the inverse-square unit-disk
// evaluator applies, generic grid pipeline otherwise.
class EnergyBackend {
public:
    explicit EnergyBackend(const ChannelInputs& in)
        : inputs_(in),
          fast_(in.path_loss.alpha_pl == 2.0 &&
                in.path_loss.cell_radius == 1.0) {
        inputs_.path_loss.validate();
        if (!(inputs_.spectral_efficiency > 0.0))
            throw DomainError("optimize: spectral efficiency must be > 0");
        if (!(inputs_.nu_d >= 0.0 && inputs_.nu_d <= 1.0))
            throw DomainError("optimize: nu_d must lie in [0, 1]");
        if (fast_) {
            evaluator_.emplace(inputs_.fading, inputs_.path_loss,
                               inputs_.spectral_efficiency);
        } else {
            loss_grid_ = path_loss_distribution(inputs_.path_loss);
        }
    }

    EnergyResult evaluate(const PolicyMatrix& policy,
                          const std::vector<double>& pi) const {
        if (fast_) return evaluator_->energy(policy, pi);
        const auto vu = make_vu_distribution(policy, pi, inputs_.fading);
        const auto power = product_distribution(vu, loss_grid_);
        return energy_per_bit(power, inputs_.spectral_efficiency);
    }

private:
    ChannelInputs inputs_;
    bool fast_;
    std::optional<PolicyEvaluator> evaluator_;
    DistributionGrid loss_grid_;
};

}  // namespace

void AnnealConfig::validate() const {
    if (!(t0 > 0.0)) throw DomainError("anneal: T0 must be > 0");
    if (!(c_sa > 0.0)) throw DomainError("anneal: c_sa must be > 0");
    if (n_temps < 1) throw DomainError("anneal: n_temps must be >= 1");
    if (!(step_scale > 0.0 && step_scale <= 1.0))
        throw DomainError("anneal: step_scale must lie in (0, 1]");
}

int AnnealConfig::resolved_proposals(const StateSpace& space) const {
    if (proposals_per_temp > 0) return proposals_per_temp;
    return 50 * space.num_states();
}

void ConstraintSet::validate() const {
    if (!(theta_tar > 0.0 && theta_tar < 1.0))
        throw DomainError("constraints: theta_tar must lie in (0, 1)");
    if (epsilon && !(*epsilon >= 0.0 && *epsilon <= theta_tar)) {
        throw DomainError(
            "constraints: epsilon must satisfy 0 <= epsilon <= theta_tar "
            "(a continuity bound above the drop budget is never active)");
    }
    StateSpace::make(B, N);
}

double cooling_temperature(const AnnealConfig& cfg, int b) {
    if (b < 0) throw DomainError("cooling_temperature: b must be >= 0");
    return cfg.t0 / (cfg.c_sa * static_cast<double>(b) + 1.0);
}

PolicyMatrix propose(const PolicyMatrix& current, const AnnealConfig& cfg,
                     double temperature, Rng& rng) {
    PolicyMatrix next = current;
    const int p = rng.below(next.space.num_states());
    auto& row = next.alpha_hat[static_cast<std::size_t>(p)];
    const double mag = cfg.step_scale * (temperature / cfg.t0);
    double sum = 0.0;
    for (double& a : row) {
        a = std::clamp(a + mag * rng.uniform(-1.0, 1.0), 0.0, 1.0);
        sum += a;
    }
    if (sum > 1.0) {
        for (double& a : row) a /= sum;
    }
    return next;
}

FeasibilityReport feasible(const PolicyMatrix& policy,
                           const ConstraintSet& cons) {
    cons.validate();
    FeasibilityReport rep;
    try {
        ChainSolution sol = solve_chain(policy);
        rep.gamma = sol.gamma;
        rep.theta_r = sol.theta_r;
        rep.pi = std::move(sol.pi);
    } catch (const ReducibleChainError& e) {
        rep.feasible = false;
        rep.gamma = kNan;
        rep.theta_r = kNan;
        rep.diagnostic = e.what();
        return rep;
    }
    rep.feasible = rep.theta_r <= cons.theta_tar &&
                   (!cons.epsilon || rep.gamma <= *cons.epsilon);
    return rep;
}

OptimizeOutcome optimize(const ConstraintSet& cons, const AnnealConfig& cfg,
                         const ChannelInputs& inputs) {
    cons.validate();
    cfg.validate();
    const StateSpace sp = StateSpace::make(cons.B, cons.N);
    const EnergyBackend backend(inputs);
    Rng rng(cfg.seed);
    const int proposals = cfg.resolved_proposals(sp);

    PolicyMatrix init = filled_policy(sp, inputs.nu_d, /*uniform=*/false);
    FeasibilityReport init_rep = feasible(init, cons);
    if (!init_rep.feasible) {
        PolicyMatrix alt = filled_policy(sp, inputs.nu_d, /*uniform=*/true);
        FeasibilityReport alt_rep = feasible(alt, cons);
        if (alt_rep.feasible) {
            init = std::move(alt);
            init_rep = std::move(alt_rep);
        }
    }

    OptimizeOutcome out;
    out.best_policy = init;
    out.best_energy = EnergyResult{kNan, kNan};
    out.gamma = kNan;
    out.theta_r = kNan;

    PolicyMatrix current = init;
    double current_db = kInf;
    double best_db = kInf;
    if (init_rep.feasible) {
        const EnergyResult e = backend.evaluate(init, init_rep.pi);
        current_db = e.energy_db;
        best_db = e.energy_db;
        out.feasible_found = true;
    }

    out.trace.reserve(static_cast<std::size_t>(cfg.n_temps));
    for (int b = 0; b < cfg.n_temps; ++b) {
        const double temp = cooling_temperature(cfg, b);
        int accepted = 0;
        for (int s = 0; s < proposals; ++s) {
            PolicyMatrix cand = propose(current, cfg, temp, rng);
            const FeasibilityReport rep = feasible(cand, cons);
            if (!rep.feasible) continue;
            double cand_db;
            try {
                cand_db = backend.evaluate(cand, rep.pi).energy_db;
            } catch (const DegenerateDistributionError&) {
                continue;
            } catch (const DivergentEnergyError&) {
                continue;
            }
            const double delta = cand_db - current_db;
            const bool accept =
                delta <= 0.0 || rng.uniform() < std::exp(-delta / temp);
            if (!accept) continue;
            ++accepted;
            current = std::move(cand);
            current_db = cand_db;
            if (cand_db < best_db) {
                best_db = cand_db;
                out.best_policy = current;
                out.feasible_found = true;
            }
        }
        out.trace.push_back(TraceRow{
            b, temp, best_db,
            static_cast<double>(accepted) / static_cast<double>(proposals)});
    }

    // Re-derive the reported metrics from the returned policy so that the
    // outcome is self-consistent regardless of the search path.
    try {
        ChainSolution sol = solve_chain(out.best_policy);
        out.gamma = sol.gamma;
        out.theta_r = sol.theta_r;
        out.pi = std::move(sol.pi);
        if (out.feasible_found) {
            out.best_energy = backend.evaluate(out.best_policy, out.pi);
        }
    } catch (const ReducibleChainError&) {
        // Only reachable when nothing feasible was found; leave NaN metrics.
    }
    return out;
}

GammaMaxResult gamma_max(ConstraintSet cons, const AnnealConfig& cfg,
                         const ChannelInputs& inputs) {
    cons.epsilon.reset();
    GammaMaxResult r;
    r.outcome = optimize(cons, cfg, inputs);
    r.gamma_m = r.outcome.gamma;
    return r;
}

BufferSearchResult buffer_search(std::vector<int> candidates,
                                 double delta_e_db, ConstraintSet cons,
                                 const AnnealConfig& cfg,
                                 const ChannelInputs& inputs) {
    if (candidates.empty())
        throw DomainError("buffer_search: candidate set must be nonempty");
    if (!(delta_e_db >= 0.0))
        throw DomainError("buffer_search: energy gain target must be >= 0");
    if (!cons.epsilon)
        throw DomainError(
            "buffer_search: a continuity bound epsilon is required");
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    BufferSearchResult result;
    for (int b : candidates) {
        cons.B = b;
        const OptimizeOutcome out = optimize(cons, cfg, inputs);
        result.rows.push_back(BufferRow{b, out.feasible_found,
                                        out.best_energy.energy_db, out.gamma,
                                        out.theta_r});
    }
    const BufferRow& baseline = result.rows.front();
    if (!baseline.feasible_found) return result;  // nothing to compare to
    result.baseline_energy_db = baseline.energy_db;
    for (const BufferRow& row : result.rows) {
        if (!row.feasible_found) continue;
        if (row.energy_db <= result.baseline_energy_db - delta_e_db &&
            row.gamma <= *cons.epsilon + 1e-12) {
            result.found = true;
            result.b_star = row.B;
            break;
        }
    }
    return result;
}

GammaMinResult gamma_min(ConstraintSet cons, const AnnealConfig& cfg,
                         const ChannelInputs& inputs, int max_halvings) {
    if (max_halvings < 1)
        throw DomainError("gamma_min: max_halvings must be >= 1");
    double eps = cons.epsilon.value_or(cons.theta_tar);
    GammaMinResult result;
    for (int i = 0; i < max_halvings; ++i) {
        cons.epsilon = eps;
        const OptimizeOutcome out = optimize(cons, cfg, inputs);
        result.rows.push_back(GammaMinRow{eps, out.feasible_found, out.gamma,
                                          out.best_energy.energy_db});
        if (!out.feasible_found) break;
        result.any_feasible = true;
        result.gamma_0 = std::min(result.gamma_0, out.gamma);
        eps *= 0.5;
    }
    return result;
}

void write_trace_csv(const std::string& path,
                     const OptimizeOutcome& outcome) {
    std::ofstream f(path);
    if (!f) throw ConfigError("trace: cannot open " + path);
    f << "temp_index,temperature,best_energy_db,accept_rate\n";
    char buf[160];
    for (const TraceRow& row : outcome.trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.6f\n",
                      row.temp_index, row.temperature, row.best_energy_db,
                      row.accept_rate);
        f << buf;
    }
}

}  // namespace lsched
