#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lsched/anneal.hpp"
#include "lsched/simulate.hpp"

namespace lsched {

enum class Mode {
    optimize,
    gamma_max,
    sweep_epsilon,
    buffer_search,
    simulate,
    validate,
};

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);  // throws ConfigError

struct SchedulerConfig {
    int B = 0;
    int N = 1;
    double theta_tar = 0.3;
    double nu_d = 0.02;
    std::optional<double> epsilon{};
    std::vector<double> epsilon_list;    // sweep-epsilon grid
    double spectral_efficiency = 0.5;
    double delta = 0.01;
    double alpha_pl = 2.0;
    double cell_radius = 1.0;
    std::vector<int> buffer_candidates;  // buffer-search candidate set
    double delta_e_db = 0.0;             // buffer-search gain target
    std::vector<int> n_list;             // gamma-max N sweep (default {N})
};

struct SimUserConfig {
    int K = 1000;
    long long T = 10000;
    double z0 = 1.0;
    int energy_batches = 20;
    std::string policy_file;  // simulate mode: thresholds source
};

struct ExperimentSpec {
    Mode mode = Mode::optimize;
    SchedulerConfig scheduler;
    AnnealConfig anneal;
    SimUserConfig sim;
    std::string output_path = "results.csv";
    bool verbose = false;
    std::vector<std::uint64_t> seeds{1};
};

// Parse the INI-style experiment description: global keys (mode, seeds)
// followed by [scheduler], [anneal], [sim], [output] sections; '#' starts
// a comment.  Unknown sections or keys, malformed values, missing required
// keys (mode, B, N, theta_tar, nu_d), and out-of-range values raise
// ConfigError naming the offending key.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec parse_config_file(const std::string& path);

struct CliOverrides {
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool verbose = false;
};

void apply_overrides(ExperimentSpec& spec, const CliOverrides& overrides);

// Exit codes shared by run_experiment and cli_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumerical = 4;

// Execute the experiment: one line of progress per run to `log`, a CSV at
// spec.output_path whose body is byte-identical for identical spec+seeds,
// and the documented exit code.
int run_experiment(const ExperimentSpec& spec, std::ostream& log);

// Full command-line entry point (argv without the program name).
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace lsched
