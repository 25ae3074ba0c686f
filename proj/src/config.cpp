#include "lsched/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "lsched/errors.hpp"

namespace lsched {

namespace {

// ---------------------------------------------------------------------------
// Small formatting helpers (single code path so CSV bodies stay byte-stable).

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string fmt_db(double v) { return fmt("%.2f", v); }      // energy, dB
std::string fmt_prob(double v) { return fmt("%.8g", v); }    // probabilities
std::string fmt_exact(double v) { return fmt("%.17g", v); }  // config echo

std::string join_u64(const std::vector<std::uint64_t>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i)
        s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

std::string join_int(const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i)
        s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

std::string join_double(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i)
        s += (i ? "," : "") + fmt_exact(xs[i]);
    return s;
}

// ---------------------------------------------------------------------------
// INI-style parsing.

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::exchange(cur, {}));
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& why) {
    const std::string where =
        section.empty() ? "top level" : "[" + section + "]";
    throw ConfigError("config: key '" + key + "' (" + where + "): " + why);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        bad_key(section, key, "expected a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& section, const std::string& key,
                    const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        bad_key(section, key, "expected an integer, got '" + v + "'");
    }
}

struct RawConfig {
    // (section, key) -> value, plus the order encountered for diagnostics.
    std::map<std::pair<std::string, std::string>, std::string> kv;

    bool has(const std::string& sec, const std::string& key) const {
        return kv.count({sec, key}) > 0;
    }
    std::optional<std::string> get(const std::string& sec,
                                   const std::string& key) {
        auto it = kv.find({sec, key});
        if (it == kv.end()) return std::nullopt;
        auto v = it->second;
        kv.erase(it);  // consumed; leftovers are unknown keys
        return v;
    }
};

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header on line " +
                                  std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scheduler" && section != "anneal" &&
                section != "sim" && section != "output")
                throw ConfigError("config: unknown section [" + section +
                                  "] on line " + std::to_string(lineno));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected 'key = value' on line " +
                              std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key on line " +
                              std::to_string(lineno));
        if (!raw.kv.emplace(std::pair{section, key}, value).second)
            bad_key(section, key, "duplicate key");
    }
    return raw;
}

}  // namespace

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::optimize: return "optimize";
        case Mode::gamma_max: return "gamma-max";
        case Mode::sweep_epsilon: return "sweep-epsilon";
        case Mode::buffer_search: return "buffer-search";
        case Mode::simulate: return "simulate";
        case Mode::validate: return "validate";
    }
    return "?";
}

Mode parse_mode(const std::string& name) {
    if (name == "optimize") return Mode::optimize;
    if (name == "gamma-max") return Mode::gamma_max;
    if (name == "sweep-epsilon") return Mode::sweep_epsilon;
    if (name == "buffer-search") return Mode::buffer_search;
    if (name == "simulate") return Mode::simulate;
    if (name == "validate") return Mode::validate;
    throw ConfigError(
        "config: unknown mode '" + name +
        "' (expected optimize, gamma-max, sweep-epsilon, buffer-search, "
        "simulate, or validate)");
}

ExperimentSpec parse_config(const std::string& text) {
    RawConfig raw = tokenize(text);
    ExperimentSpec spec;

    // --- required keys -----------------------------------------------------
    const auto require = [&](const std::string& sec, const std::string& key) {
        auto v = raw.get(sec, key);
        if (!v) bad_key(sec, key, "missing required key");
        return *v;
    };
    spec.mode = parse_mode(require("", "mode"));
    spec.scheduler.B =
        static_cast<int>(parse_int("scheduler", "B", require("scheduler", "B")));
    spec.scheduler.N =
        static_cast<int>(parse_int("scheduler", "N", require("scheduler", "N")));
    spec.scheduler.theta_tar =
        parse_double("scheduler", "theta_tar", require("scheduler", "theta_tar"));
    spec.scheduler.nu_d =
        parse_double("scheduler", "nu_d", require("scheduler", "nu_d"));

    // --- optional keys ------------------------------------------------------
    if (auto v = raw.get("", "seeds")) {
        spec.seeds.clear();
        for (const auto& tok : split_list(*v)) {
            const long long s = parse_int("", "seeds", tok);
            if (s < 0) bad_key("", "seeds", "seeds must be >= 0");
            spec.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (spec.seeds.empty()) bad_key("", "seeds", "empty seed list");
    }
    if (auto v = raw.get("scheduler", "epsilon"))
        spec.scheduler.epsilon = parse_double("scheduler", "epsilon", *v);
    if (auto v = raw.get("scheduler", "epsilon_list")) {
        for (const auto& tok : split_list(*v))
            spec.scheduler.epsilon_list.push_back(
                parse_double("scheduler", "epsilon_list", tok));
        if (spec.scheduler.epsilon_list.empty())
            bad_key("scheduler", "epsilon_list", "empty list");
    }
    if (auto v = raw.get("scheduler", "C"))
        spec.scheduler.spectral_efficiency = parse_double("scheduler", "C", *v);
    if (auto v = raw.get("scheduler", "delta"))
        spec.scheduler.delta = parse_double("scheduler", "delta", *v);
    if (auto v = raw.get("scheduler", "alpha_pl"))
        spec.scheduler.alpha_pl = parse_double("scheduler", "alpha_pl", *v);
    if (auto v = raw.get("scheduler", "cell_radius"))
        spec.scheduler.cell_radius =
            parse_double("scheduler", "cell_radius", *v);
    if (auto v = raw.get("scheduler", "buffer_candidates")) {
        for (const auto& tok : split_list(*v))
            spec.scheduler.buffer_candidates.push_back(static_cast<int>(
                parse_int("scheduler", "buffer_candidates", tok)));
    }
    if (auto v = raw.get("scheduler", "delta_e_db"))
        spec.scheduler.delta_e_db =
            parse_double("scheduler", "delta_e_db", *v);
    if (auto v = raw.get("scheduler", "N_list")) {
        for (const auto& tok : split_list(*v))
            spec.scheduler.n_list.push_back(
                static_cast<int>(parse_int("scheduler", "N_list", tok)));
    }
    if (auto v = raw.get("anneal", "T0"))
        spec.anneal.t0 = parse_double("anneal", "T0", *v);
    if (auto v = raw.get("anneal", "c_sa"))
        spec.anneal.c_sa = parse_double("anneal", "c_sa", *v);
    if (auto v = raw.get("anneal", "n_temps"))
        spec.anneal.n_temps =
            static_cast<int>(parse_int("anneal", "n_temps", *v));
    if (auto v = raw.get("anneal", "proposals_per_temp"))
        spec.anneal.proposals_per_temp =
            static_cast<int>(parse_int("anneal", "proposals_per_temp", *v));
    if (auto v = raw.get("anneal", "step_scale"))
        spec.anneal.step_scale = parse_double("anneal", "step_scale", *v);
    if (auto v = raw.get("sim", "K"))
        spec.sim.K = static_cast<int>(parse_int("sim", "K", *v));
    if (auto v = raw.get("sim", "T")) spec.sim.T = parse_int("sim", "T", *v);
    if (auto v = raw.get("sim", "Z0"))
        spec.sim.z0 = parse_double("sim", "Z0", *v);
    if (auto v = raw.get("sim", "energy_batches"))
        spec.sim.energy_batches =
            static_cast<int>(parse_int("sim", "energy_batches", *v));
    if (auto v = raw.get("sim", "policy_file")) spec.sim.policy_file = *v;
    if (auto v = raw.get("output", "path")) spec.output_path = *v;
    if (auto v = raw.get("output", "verbose")) {
        if (*v == "true" || *v == "1")
            spec.verbose = true;
        else if (*v == "false" || *v == "0")
            spec.verbose = false;
        else
            bad_key("output", "verbose", "expected true/false");
    }

    // --- unknown keys -------------------------------------------------------
    if (!raw.kv.empty()) {
        const auto& [sk, v] = *raw.kv.begin();
        bad_key(sk.first, sk.second, "unknown key");
    }

    // --- semantic validation ------------------------------------------------
    const SchedulerConfig& sc = spec.scheduler;
    if (sc.B < 0) bad_key("scheduler", "B", "must be >= 0");
    if (sc.N < 1) bad_key("scheduler", "N", "must be >= 1");
    if (!(sc.theta_tar > 0.0 && sc.theta_tar < 1.0))
        bad_key("scheduler", "theta_tar", "must lie in (0, 1)");
    if (!(sc.nu_d >= 0.0 && sc.nu_d <= 1.0))
        bad_key("scheduler", "nu_d", "must lie in [0, 1]");
    if (sc.epsilon && !(*sc.epsilon >= 0.0 && *sc.epsilon <= sc.theta_tar))
        bad_key("scheduler", "epsilon",
                "must satisfy 0 <= epsilon <= theta_tar (a continuity bound "
                "above the drop budget is never active)");
    for (double e : sc.epsilon_list) {
        if (!(e >= 0.0 && e <= sc.theta_tar))
            bad_key("scheduler", "epsilon_list",
                    "every entry must satisfy 0 <= epsilon <= theta_tar");
    }
    if (!(sc.spectral_efficiency > 0.0))
        bad_key("scheduler", "C", "must be > 0");
    if (!(sc.delta > 0.0 && sc.delta < 1.0))
        bad_key("scheduler", "delta", "must lie in (0, 1)");
    if (!(sc.alpha_pl > 0.0)) bad_key("scheduler", "alpha_pl", "must be > 0");
    if (sc.cell_radius != 1.0)
        bad_key("scheduler", "cell_radius",
                "must be 1 (distances are normalized to the cell radius)");
    for (int b : sc.buffer_candidates) {
        if (b < 0) bad_key("scheduler", "buffer_candidates", "must be >= 0");
    }
    if (!(sc.delta_e_db >= 0.0))
        bad_key("scheduler", "delta_e_db", "must be >= 0");
    for (int n : sc.n_list) {
        if (n < 1) bad_key("scheduler", "N_list", "entries must be >= 1");
    }
    if (!(spec.anneal.t0 > 0.0)) bad_key("anneal", "T0", "must be > 0");
    if (!(spec.anneal.c_sa > 0.0)) bad_key("anneal", "c_sa", "must be > 0");
    if (spec.anneal.n_temps < 1) bad_key("anneal", "n_temps", "must be >= 1");
    if (!(spec.anneal.step_scale > 0.0 && spec.anneal.step_scale <= 1.0))
        bad_key("anneal", "step_scale", "must lie in (0, 1]");
    if (spec.sim.K < 1) bad_key("sim", "K", "must be >= 1");
    if (spec.sim.T < 1) bad_key("sim", "T", "must be >= 1");
    if (!(spec.sim.z0 > 0.0)) bad_key("sim", "Z0", "must be > 0");
    if (spec.sim.energy_batches < 1)
        bad_key("sim", "energy_batches", "must be >= 1");

    // --- mode-specific requirements ------------------------------------------
    if (spec.mode == Mode::sweep_epsilon && sc.epsilon_list.empty())
        bad_key("scheduler", "epsilon_list",
                "required for mode = sweep-epsilon");
    if (spec.mode == Mode::buffer_search) {
        if (sc.buffer_candidates.empty())
            bad_key("scheduler", "buffer_candidates",
                    "required for mode = buffer-search");
        if (!sc.epsilon)
            bad_key("scheduler", "epsilon",
                    "required for mode = buffer-search");
    }
    if (spec.mode == Mode::simulate && spec.sim.policy_file.empty())
        bad_key("sim", "policy_file", "required for mode = simulate");
    return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void apply_overrides(ExperimentSpec& spec, const CliOverrides& overrides) {
    if (overrides.mode) spec.mode = parse_mode(*overrides.mode);
    if (overrides.seed) spec.seeds = {*overrides.seed};
    if (overrides.out) spec.output_path = *overrides.out;
    if (overrides.verbose) spec.verbose = true;
}

// ---------------------------------------------------------------------------
// Experiment execution.

namespace {

ChannelInputs make_inputs(const SchedulerConfig& sc) {
    ChannelInputs in;
    in.fading = FadingModel{};
    in.path_loss = PathLossModel{sc.cell_radius, sc.delta, sc.alpha_pl};
    in.nu_d = sc.nu_d;
    in.spectral_efficiency = sc.spectral_efficiency;
    return in;
}

ConstraintSet make_constraints(const SchedulerConfig& sc) {
    ConstraintSet cons;
    cons.theta_tar = sc.theta_tar;
    cons.epsilon = sc.epsilon;
    cons.B = sc.B;
    cons.N = sc.N;
    return cons;
}

std::vector<std::string> config_comments(const ExperimentSpec& spec) {
    const SchedulerConfig& sc = spec.scheduler;
    std::vector<std::string> c;
    c.push_back("mode = " + mode_name(spec.mode));
    c.push_back("seeds = " + join_u64(spec.seeds));
    c.push_back("scheduler.B = " + std::to_string(sc.B));
    c.push_back("scheduler.N = " + std::to_string(sc.N));
    c.push_back("scheduler.theta_tar = " + fmt_exact(sc.theta_tar));
    c.push_back("scheduler.nu_d = " + fmt_exact(sc.nu_d));
    c.push_back("scheduler.epsilon = " +
                (sc.epsilon ? fmt_exact(*sc.epsilon) : std::string("none")));
    if (!sc.epsilon_list.empty())
        c.push_back("scheduler.epsilon_list = " +
                    join_double(sc.epsilon_list));
    c.push_back("scheduler.C = " + fmt_exact(sc.spectral_efficiency));
    c.push_back("scheduler.delta = " + fmt_exact(sc.delta));
    c.push_back("scheduler.alpha_pl = " + fmt_exact(sc.alpha_pl));
    c.push_back("scheduler.cell_radius = " + fmt_exact(sc.cell_radius));
    if (!sc.buffer_candidates.empty())
        c.push_back("scheduler.buffer_candidates = " +
                    join_int(sc.buffer_candidates));
    if (spec.mode == Mode::buffer_search)
        c.push_back("scheduler.delta_e_db = " + fmt_exact(sc.delta_e_db));
    if (!sc.n_list.empty())
        c.push_back("scheduler.N_list = " + join_int(sc.n_list));
    c.push_back("anneal.T0 = " + fmt_exact(spec.anneal.t0));
    c.push_back("anneal.c_sa = " + fmt_exact(spec.anneal.c_sa));
    c.push_back("anneal.n_temps = " + std::to_string(spec.anneal.n_temps));
    c.push_back("anneal.proposals_per_temp = " +
                std::to_string(spec.anneal.proposals_per_temp) +
                (spec.anneal.proposals_per_temp <= 0
                     ? " (auto: 50 per state)"
                     : ""));
    c.push_back("anneal.step_scale = " + fmt_exact(spec.anneal.step_scale));
    if (spec.mode == Mode::simulate || spec.mode == Mode::validate) {
        c.push_back("sim.K = " + std::to_string(spec.sim.K));
        c.push_back("sim.T = " + std::to_string(spec.sim.T));
        c.push_back("sim.Z0 = " + fmt_exact(spec.sim.z0));
        c.push_back("sim.energy_batches = " +
                    std::to_string(spec.sim.energy_batches));
        if (!spec.sim.policy_file.empty())
            c.push_back("sim.policy_file = " + spec.sim.policy_file);
    }
    return c;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& comments,
               const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream f(path);
    if (!f) throw ConfigError("output: cannot open " + path);
    for (const auto& c : comments) f << "# " << c << "\n";
    f << header << "\n";
    for (const auto& r : rows) f << r << "\n";
}

std::string output_stem(const std::string& path) {
    const auto dot = path.rfind('.');
    const auto slash = path.find_last_of("/\\");
    if (dot == std::string::npos ||
        (slash != std::string::npos && dot < slash))
        return path;
    return path.substr(0, dot);
}

void emit_run_artifacts(const ExperimentSpec& spec,
                        const OptimizeOutcome& outcome,
                        const std::string& tag) {
    const bool always = spec.mode == Mode::optimize ||
                        spec.mode == Mode::gamma_max;
    if (!always && !spec.verbose) return;
    const std::string stem = output_stem(spec.output_path);
    write_trace_csv(stem + "_trace" + tag + ".csv", outcome);
    std::ofstream f(stem + "_policy" + tag + ".txt");
    if (!f)
        throw ConfigError("output: cannot open " + stem + "_policy" + tag +
                          ".txt");
    f << dump_policy(outcome.best_policy);
}

std::string feas_str(bool feasible) { return feasible ? "1" : "0"; }

int run_optimize(const ExperimentSpec& spec, std::ostream& log) {
    const ChannelInputs inputs = make_inputs(spec.scheduler);
    const ConstraintSet cons = make_constraints(spec.scheduler);
    std::vector<std::string> rows;
    bool any = false;
    for (std::uint64_t seed : spec.seeds) {
        AnnealConfig cfg = spec.anneal;
        cfg.seed = seed;
        const OptimizeOutcome out = optimize(cons, cfg, inputs);
        any = any || out.feasible_found;
        emit_run_artifacts(spec, out, "_s" + std::to_string(seed));
        log << "optimize seed=" << seed << ": energy="
            << fmt_db(out.best_energy.energy_db) << " dB gamma="
            << fmt_prob(out.gamma) << " theta_r=" << fmt_prob(out.theta_r)
            << " feasible=" << feas_str(out.feasible_found) << "\n";
        rows.push_back(
            std::to_string(seed) + "," + std::to_string(cons.B) + "," +
            std::to_string(cons.N) + "," + fmt_prob(cons.theta_tar) + "," +
            fmt_prob(inputs.nu_d) + "," +
            (cons.epsilon ? fmt_prob(*cons.epsilon) : "") + "," +
            fmt_db(out.best_energy.energy_db) + "," + fmt_prob(out.gamma) +
            "," + fmt_prob(out.theta_r) + "," + feas_str(out.feasible_found));
    }
    write_csv(spec.output_path, config_comments(spec),
              "seed,B,N,theta_tar,nu_d,epsilon,energy_db,gamma,theta_r,"
              "feasible",
              rows);
    return any ? kExitOk : kExitInfeasible;
}

int run_gamma_max(const ExperimentSpec& spec, std::ostream& log) {
    const ChannelInputs inputs = make_inputs(spec.scheduler);
    ConstraintSet cons = make_constraints(spec.scheduler);
    std::vector<int> n_list = spec.scheduler.n_list;
    if (n_list.empty()) n_list = {spec.scheduler.N};
    std::vector<std::string> rows;
    bool all_answered = true;
    for (int n : n_list) {
        cons.N = n;
        bool any = false;
        for (std::uint64_t seed : spec.seeds) {
            AnnealConfig cfg = spec.anneal;
            cfg.seed = seed;
            const GammaMaxResult r = gamma_max(cons, cfg, inputs);
            any = any || r.outcome.feasible_found;
            emit_run_artifacts(spec, r.outcome,
                               "_N" + std::to_string(n) + "_s" +
                                   std::to_string(seed));
            log << "gamma-max N=" << n << " seed=" << seed << ": energy="
                << fmt_db(r.outcome.best_energy.energy_db) << " dB gamma_m="
                << fmt_prob(r.gamma_m) << " theta_r="
                << fmt_prob(r.outcome.theta_r) << " feasible="
                << feas_str(r.outcome.feasible_found) << "\n";
            rows.push_back(std::to_string(n) + "," + std::to_string(seed) +
                           "," + fmt_prob(r.gamma_m) + "," +
                           fmt_db(r.outcome.best_energy.energy_db) + "," +
                           fmt_prob(r.outcome.theta_r) + "," +
                           feas_str(r.outcome.feasible_found));
        }
        all_answered = all_answered && any;
    }
    write_csv(spec.output_path, config_comments(spec),
              "N,seed,gamma_m,energy_db,theta_r,feasible", rows);
    return all_answered ? kExitOk : kExitInfeasible;
}

int run_sweep_epsilon(const ExperimentSpec& spec, std::ostream& log) {
    const ChannelInputs inputs = make_inputs(spec.scheduler);
    ConstraintSet cons = make_constraints(spec.scheduler);
    std::vector<std::string> rows;
    bool all_answered = true;
    for (double eps : spec.scheduler.epsilon_list) {
        cons.epsilon = eps;
        bool any = false;
        for (std::uint64_t seed : spec.seeds) {
            AnnealConfig cfg = spec.anneal;
            cfg.seed = seed;
            const OptimizeOutcome out = optimize(cons, cfg, inputs);
            any = any || out.feasible_found;
            emit_run_artifacts(spec, out,
                               "_eps" + fmt_prob(eps) + "_s" +
                                   std::to_string(seed));
            log << "sweep-epsilon eps=" << fmt_prob(eps) << " seed=" << seed
                << ": energy=" << fmt_db(out.best_energy.energy_db)
                << " dB gamma=" << fmt_prob(out.gamma) << " theta_r="
                << fmt_prob(out.theta_r) << " feasible="
                << feas_str(out.feasible_found) << "\n";
            rows.push_back(fmt_prob(eps) + "," + std::to_string(seed) + "," +
                           fmt_db(out.best_energy.energy_db) + "," +
                           fmt_prob(out.gamma) + "," + fmt_prob(out.theta_r) +
                           "," + feas_str(out.feasible_found));
        }
        all_answered = all_answered && any;
    }
    write_csv(spec.output_path, config_comments(spec),
              "epsilon,seed,energy_db,gamma,theta_r,feasible", rows);
    return all_answered ? kExitOk : kExitInfeasible;
}

int run_buffer_search(const ExperimentSpec& spec, std::ostream& log) {
    const ChannelInputs inputs = make_inputs(spec.scheduler);
    const ConstraintSet cons = make_constraints(spec.scheduler);
    std::vector<std::string> rows;
    bool any_found = false;
    for (std::uint64_t seed : spec.seeds) {
        AnnealConfig cfg = spec.anneal;
        cfg.seed = seed;
        const BufferSearchResult r =
            buffer_search(spec.scheduler.buffer_candidates,
                          spec.scheduler.delta_e_db, cons, cfg, inputs);
        any_found = any_found || r.found;
        log << "buffer-search seed=" << seed << ": "
            << (r.found ? "B*=" + std::to_string(r.b_star) : "not-found")
            << " (baseline " << fmt_db(r.baseline_energy_db) << " dB)\n";
        const bool base_ok = r.rows.front().feasible_found;
        for (const BufferRow& row : r.rows) {
            const bool qualifies =
                base_ok && row.feasible_found &&
                row.energy_db <=
                    r.baseline_energy_db - spec.scheduler.delta_e_db &&
                row.gamma <= *cons.epsilon + 1e-12;
            rows.push_back(std::to_string(seed) + "," +
                           std::to_string(row.B) + "," +
                           fmt_db(row.energy_db) + "," +
                           fmt_prob(row.gamma) + "," +
                           fmt_prob(row.theta_r) + "," +
                           feas_str(row.feasible_found) + "," +
                           feas_str(qualifies) + "," +
                           std::to_string(r.found ? r.b_star : -1));
        }
    }
    write_csv(spec.output_path, config_comments(spec),
              "seed,B,energy_db,gamma,theta_r,feasible,qualifies,b_star",
              rows);
    return any_found ? kExitOk : kExitInfeasible;
}

SimConfig make_sim_config(const ExperimentSpec& spec,
                          const ThresholdTable& table, std::uint64_t seed) {
    SimConfig sim;
    sim.K = spec.sim.K;
    sim.T = spec.sim.T;
    sim.seed = seed;
    sim.z0 = spec.sim.z0;
    sim.spectral_efficiency = spec.scheduler.spectral_efficiency;
    sim.fading = FadingModel{};
    sim.path_loss = PathLossModel{spec.scheduler.cell_radius,
                                  spec.scheduler.delta,
                                  spec.scheduler.alpha_pl};
    sim.table = table;
    sim.nu_d = spec.scheduler.nu_d;
    sim.energy_batches = spec.sim.energy_batches;
    return sim;
}

std::string occupancy_header(int n_states) {
    std::string h;
    for (int p = 0; p < n_states; ++p) h += ",occ_" + std::to_string(p);
    return h;
}

std::string occupancy_cells(const SimReport& rep) {
    std::string s;
    for (double o : rep.state_occupancy) s += "," + fmt_prob(o);
    return s;
}

int run_simulate(const ExperimentSpec& spec, std::ostream& log) {
    const PolicyMatrix policy = load_policy_file(spec.sim.policy_file);
    const ThresholdTable table = recover_thresholds(policy, FadingModel{});
    std::vector<std::string> rows;
    for (std::uint64_t seed : spec.seeds) {
        const SimConfig sim = make_sim_config(spec, table, seed);
        const SimReport rep = run(sim);
        log << "simulate seed=" << seed << ": theta_hat="
            << fmt_prob(rep.theta_hat.value) << " gamma_hat="
            << fmt_prob(rep.gamma_hat.value) << " energy="
            << fmt_db(rep.energy_per_scheduled_bit_db) << " dB\n";
        rows.push_back(std::to_string(seed) + "," + std::to_string(sim.K) +
                       "," + std::to_string(sim.T) + "," +
                       fmt_prob(rep.theta_hat.value) + "," +
                       fmt_prob(rep.theta_hat.half_width) + "," +
                       fmt_prob(rep.gamma_hat.value) + "," +
                       fmt_prob(rep.gamma_hat.half_width) + "," +
                       fmt_db(rep.energy_per_scheduled_bit_db) + "," +
                       fmt_db(rep.energy_per_delivered_bit_db) +
                       occupancy_cells(rep));
    }
    write_csv(spec.output_path, config_comments(spec),
              "seed,K,T,theta_hat,theta_hw,gamma_hat,gamma_hw,"
              "energy_sched_db,energy_delivered_db" +
                  occupancy_header(policy.space.num_states()),
              rows);
    return kExitOk;
}

int run_validate(const ExperimentSpec& spec, std::ostream& log) {
    const ChannelInputs inputs = make_inputs(spec.scheduler);
    const ConstraintSet cons = make_constraints(spec.scheduler);
    std::vector<std::string> rows;
    bool any = false;
    for (std::uint64_t seed : spec.seeds) {
        AnnealConfig cfg = spec.anneal;
        cfg.seed = seed;
        const OptimizeOutcome out = optimize(cons, cfg, inputs);
        emit_run_artifacts(spec, out, "_s" + std::to_string(seed));
        if (!out.feasible_found) {
            log << "validate seed=" << seed << ": optimization infeasible\n";
            rows.push_back(std::to_string(seed) +
                           ",nan,nan,nan,nan,nan,nan,nan,nan,nan,nan");
            continue;
        }
        any = true;
        const ThresholdTable table =
            recover_thresholds(out.best_policy, inputs.fading);
        const SimConfig sim = make_sim_config(spec, table, seed);
        const SimReport rep = run(sim);
        const double d_theta = rep.theta_hat.value - out.theta_r;
        const double d_gamma = rep.gamma_hat.value - out.gamma;
        const double d_energy =
            rep.energy_per_scheduled_bit_db - out.best_energy.energy_db;
        const double occ_dev = occupancy_check(rep, out.pi);
        log << "validate seed=" << seed << ": dtheta=" << fmt_prob(d_theta)
            << " dgamma=" << fmt_prob(d_gamma) << " denergy="
            << fmt_db(d_energy) << " dB occ_dev=" << fmt_prob(occ_dev)
            << "\n";
        rows.push_back(
            std::to_string(seed) + "," + fmt_db(out.best_energy.energy_db) +
            "," + fmt_prob(out.gamma) + "," + fmt_prob(out.theta_r) + "," +
            fmt_prob(rep.theta_hat.value) + "," +
            fmt_prob(rep.gamma_hat.value) + "," +
            fmt_db(rep.energy_per_scheduled_bit_db) + "," +
            fmt_prob(d_theta) + "," + fmt_prob(d_gamma) + "," +
            fmt_db(d_energy) + "," + fmt_prob(occ_dev));
    }
    write_csv(spec.output_path, config_comments(spec),
              "seed,energy_db,gamma,theta_r,theta_hat,gamma_hat,"
              "energy_sched_db,dtheta,dgamma,denergy_db,occ_max_dev",
              rows);
    return any ? kExitOk : kExitInfeasible;
}

}  // namespace

int run_experiment(const ExperimentSpec& spec, std::ostream& log) {
    switch (spec.mode) {
        case Mode::optimize: return run_optimize(spec, log);
        case Mode::gamma_max: return run_gamma_max(spec, log);
        case Mode::sweep_epsilon: return run_sweep_epsilon(spec, log);
        case Mode::buffer_search: return run_buffer_search(spec, log);
        case Mode::simulate: return run_simulate(spec, log);
        case Mode::validate: return run_validate(spec, log);
    }
    throw ConfigError("config: unhandled mode");
}

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    CLI::App app{
        "Energy-efficient loss-tolerant scheduler: policy optimization and "
        "packet-level validation"};
    std::string config_path;
    CliOverrides overrides;
    std::string mode_str, out_str;
    std::uint64_t seed_val = 0;
    app.add_option("config", config_path, "experiment config file")
        ->required();
    auto* mode_opt = app.add_option("--mode", mode_str,
                                    "override the config's mode");
    auto* seed_opt =
        app.add_option("--seed", seed_val, "run a single seed");
    auto* out_opt =
        app.add_option("--out", out_str, "override the output CSV path");
    app.add_flag("--verbose", overrides.verbose,
                 "emit per-run trace and policy files in every mode");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    }

    try {
        ExperimentSpec spec = parse_config_file(config_path);
        if (*mode_opt) overrides.mode = mode_str;
        if (*seed_opt) overrides.seed = seed_val;
        if (*out_opt) overrides.out = out_str;
        apply_overrides(spec, overrides);
        return run_experiment(spec, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const InfeasiblePolicyError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ReducibleChainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace lsched
