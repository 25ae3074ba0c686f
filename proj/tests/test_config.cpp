// Experiment-description and CLI tests: INI parsing with defaults and
// diagnostics, override handling, per-mode CSV output with its resolved
// configuration echo, byte-stable reruns, and process exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lsched/config.hpp"
#include "lsched/fsmc.hpp"

using namespace lsched;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal =
    "mode = optimize\n"
    "[scheduler]\n"
    "B = 0\n"
    "N = 1\n"
    "theta_tar = 0.3\n"
    "nu_d = 0.02\n";

// A config that parses in a few milliseconds end to end.
std::string tiny_config(const std::string& mode, const std::string& extra) {
    return "mode = " + mode +
           "\n"
           "[scheduler]\n"
           "B = 0\n"
           "N = 1\n"
           "theta_tar = 0.3\n"
           "nu_d = 0.02\n" +
           extra +
           "[anneal]\n"
           "n_temps = 2\n"
           "proposals_per_temp = 10\n";
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(bool(f));
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("/tmp/lsched_cfg_tests") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    REQUIRE(bool(f));
    f << text;
}

std::string parse_error(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

int count_data_rows(const std::string& csv) {
    std::istringstream ss(csv);
    std::string line;
    int rows = 0;
    bool seen_header = false;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            seen_header = true;
            continue;
        }
        ++rows;
    }
    return rows;
}

}  // namespace

TEST_CASE("minimal description fills every default") {
    const ExperimentSpec spec = parse_config(kMinimal);
    CHECK(spec.mode == Mode::optimize);
    CHECK(spec.scheduler.B == 0);
    CHECK(spec.scheduler.N == 1);
    CHECK(spec.scheduler.theta_tar == 0.3);
    CHECK(spec.scheduler.nu_d == 0.02);
    CHECK_FALSE(spec.scheduler.epsilon.has_value());
    CHECK(spec.scheduler.epsilon_list.empty());
    CHECK(spec.scheduler.spectral_efficiency == 0.5);
    CHECK(spec.scheduler.delta == 0.01);
    CHECK(spec.scheduler.alpha_pl == 2.0);
    CHECK(spec.scheduler.cell_radius == 1.0);
    CHECK(spec.anneal.t0 == 1.0);
    CHECK(spec.anneal.c_sa == 1.0);
    CHECK(spec.anneal.n_temps == 100);
    CHECK(spec.anneal.proposals_per_temp == 0);
    CHECK(spec.anneal.step_scale == 0.25);
    CHECK(spec.sim.K == 1000);
    CHECK(spec.sim.T == 10000);
    CHECK(spec.sim.z0 == 1.0);
    CHECK(spec.sim.energy_batches == 20);
    CHECK(spec.output_path == "results.csv");
    CHECK_FALSE(spec.verbose);
    CHECK(spec.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("every section key is honored") {
    const ExperimentSpec spec = parse_config(
        "mode = sweep-epsilon\n"
        "seeds = 1, 2,3\n"
        "# a comment line\n"
        "[scheduler]\n"
        "B = 2\n"
        "N = 3\n"
        "theta_tar = 0.25\n"
        "nu_d = 0.01\n"
        "epsilon = 0.02   # trailing comment\n"
        "epsilon_list = 0.01, 0.02, 0.05, 0.09\n"
        "C = 0.75\n"
        "delta = 0.02\n"
        "alpha_pl = 2\n"
        "cell_radius = 1\n"
        "buffer_candidates = 0, 1, 2\n"
        "delta_e_db = 1.5\n"
        "N_list = 1, 2\n"
        "[anneal]\n"
        "T0 = 2.5\n"
        "c_sa = 0.5\n"
        "n_temps = 42\n"
        "proposals_per_temp = 11\n"
        "step_scale = 0.1\n"
        "[sim]\n"
        "K = 123\n"
        "T = 456\n"
        "Z0 = 1.5\n"
        "energy_batches = 4\n"
        "policy_file = /tmp/p.txt\n"
        "[output]\n"
        "path = out.csv\n"
        "verbose = true\n");
    CHECK(spec.mode == Mode::sweep_epsilon);
    CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(spec.scheduler.B == 2);
    CHECK(spec.scheduler.N == 3);
    CHECK(spec.scheduler.theta_tar == 0.25);
    CHECK(spec.scheduler.epsilon == 0.02);
    REQUIRE(spec.scheduler.epsilon_list.size() == 4);
    CHECK(spec.scheduler.epsilon_list[3] == 0.09);
    CHECK(spec.scheduler.spectral_efficiency == 0.75);
    CHECK(spec.scheduler.buffer_candidates == std::vector<int>{0, 1, 2});
    CHECK(spec.scheduler.delta_e_db == 1.5);
    CHECK(spec.scheduler.n_list == std::vector<int>{1, 2});
    CHECK(spec.anneal.t0 == 2.5);
    CHECK(spec.anneal.n_temps == 42);
    CHECK(spec.anneal.proposals_per_temp == 11);
    CHECK(spec.sim.K == 123);
    CHECK(spec.sim.T == 456);
    CHECK(spec.sim.z0 == 1.5);
    CHECK(spec.sim.policy_file == "/tmp/p.txt");
    CHECK(spec.output_path == "out.csv");
    CHECK(spec.verbose);
}

TEST_CASE("diagnostics name the offending key") {
    CHECK(parse_error("[scheduler]\nB = 0\nN = 1\ntheta_tar = 0.3\n"
                      "nu_d = 0.02\n")
              .find("mode") != std::string::npos);
    CHECK(parse_error("mode = optimize\n[scheduler]\nN = 1\n"
                      "theta_tar = 0.3\nnu_d = 0.02\n")
              .find("'B'") != std::string::npos);
    CHECK(parse_error(kMinimal + "bogus = 1\n").find("bogus") !=
          std::string::npos);
    CHECK(parse_error(kMinimal + "[foo]\nx = 1\n").find("[foo]") !=
          std::string::npos);
    CHECK(parse_error(kMinimal + "B = 1\n").find("duplicate") !=
          std::string::npos);
    CHECK(parse_error(kMinimal + "broken line\n").find("key = value") !=
          std::string::npos);
    CHECK(parse_error("mode = optimize\n[scheduler]\nB = 1.5\nN = 1\n"
                      "theta_tar = 0.3\nnu_d = 0.02\n")
              .find("integer") != std::string::npos);
    CHECK(parse_error("mode = optimize\n[scheduler]\nB = 0\nN = 1\n"
                      "theta_tar = abc\nnu_d = 0.02\n")
              .find("number") != std::string::npos);
    CHECK(parse_error("mode = warp\n" + kMinimal.substr(16))
              .find("unknown mode") != std::string::npos);

    const std::string eps_err = parse_error(kMinimal + "epsilon = 0.4\n");
    CHECK(eps_err.find("epsilon") != std::string::npos);
    CHECK(eps_err.find("theta_tar") != std::string::npos);
    CHECK(eps_err.find("drop budget") != std::string::npos);

    CHECK(parse_error(kMinimal + "epsilon_list = 0.01, 0.5\n")
              .find("every entry") != std::string::npos);
    CHECK(parse_error(kMinimal + "cell_radius = 2\n")
              .find("normalized") != std::string::npos);
    CHECK(parse_error("mode = optimize\nseeds = -1\n" + kMinimal.substr(16))
              .find("seeds") != std::string::npos);
    CHECK(parse_error(kMinimal + "[output]\nverbose = maybe\n")
              .find("true/false") != std::string::npos);

    const std::string no_theta = "mode = optimize\n[scheduler]\nB = 0\n"
                                 "N = 1\nnu_d = 0.02\ntheta_tar = 0\n";
    CHECK(parse_error(no_theta).find("theta_tar") != std::string::npos);

    CHECK(parse_error("mode = sweep-epsilon\n" + kMinimal.substr(16))
              .find("epsilon_list") != std::string::npos);
    CHECK(parse_error("mode = buffer-search\n" + kMinimal.substr(16))
              .find("buffer_candidates") != std::string::npos);
    CHECK(parse_error("mode = buffer-search\n" + kMinimal.substr(16) +
                      "buffer_candidates = 0, 1\n")
              .find("'epsilon'") != std::string::npos);
    CHECK(parse_error("mode = simulate\n" + kMinimal.substr(16))
              .find("policy_file") != std::string::npos);
}

TEST_CASE("mode names round trip") {
    for (Mode m : {Mode::optimize, Mode::gamma_max, Mode::sweep_epsilon,
                   Mode::buffer_search, Mode::simulate, Mode::validate})
        CHECK(parse_mode(mode_name(m)) == m);
    CHECK_THROWS_AS(parse_mode("bogus"), ConfigError);
}

TEST_CASE("command-line overrides replace config values") {
    ExperimentSpec spec = parse_config(kMinimal);
    CliOverrides ov;
    ov.mode = "gamma-max";
    ov.seed = 9;
    ov.out = "elsewhere.csv";
    ov.verbose = true;
    apply_overrides(spec, ov);
    CHECK(spec.mode == Mode::gamma_max);
    CHECK(spec.seeds == std::vector<std::uint64_t>{9});
    CHECK(spec.output_path == "elsewhere.csv");
    CHECK(spec.verbose);
}

TEST_CASE("optimization runs write the documented CSV and artifacts") {
    const fs::path dir = fresh_dir("optimize");
    ExperimentSpec spec = parse_config(tiny_config("optimize", ""));
    spec.seeds = {1, 2};
    spec.output_path = (dir / "res.csv").string();

    std::ostringstream log;
    const int rc = run_experiment(spec, log);
    CHECK(rc == kExitOk);
    CHECK(log.str().find("optimize seed=1") != std::string::npos);

    const std::string csv = slurp(dir / "res.csv");
    CHECK(csv.find("# mode = optimize\n") != std::string::npos);
    CHECK(csv.find("# seeds = 1,2\n") != std::string::npos);
    CHECK(csv.find("# scheduler.theta_tar = 0.2999") != std::string::npos);
    CHECK(csv.find("seed,B,N,theta_tar,nu_d,epsilon,energy_db,gamma,"
                   "theta_r,feasible\n") != std::string::npos);
    CHECK(count_data_rows(csv) == 2);

    // Optimization modes always persist their search trace and policy.
    CHECK(fs::exists(dir / "res_trace_s1.csv"));
    CHECK(fs::exists(dir / "res_policy_s1.txt"));
    CHECK(fs::exists(dir / "res_trace_s2.csv"));
    const PolicyMatrix saved =
        load_policy_file((dir / "res_policy_s1.txt").string());
    CHECK(saved.space.B == 0);
    CHECK(saved.space.N == 1);

    // Rerunning the same description yields byte-identical output.
    ExperimentSpec again = spec;
    again.output_path = (dir / "res2.csv").string();
    std::ostringstream log2;
    CHECK(run_experiment(again, log2) == kExitOk);
    CHECK(slurp(dir / "res2.csv") == csv);
}

TEST_CASE("unattainable budgets exit with the infeasible code") {
    const fs::path dir = fresh_dir("infeasible");
    ExperimentSpec spec = parse_config(tiny_config("optimize", ""));
    spec.scheduler.theta_tar = 0.005;  // below nu_d: impossible without buffer
    spec.output_path = (dir / "res.csv").string();
    std::ostringstream log;
    CHECK(run_experiment(spec, log) == kExitInfeasible);
    const std::string csv = slurp(dir / "res.csv");
    CHECK(count_data_rows(csv) == 1);
    CHECK(csv.find("nan") != std::string::npos);
    CHECK(csv.back() == '\n');
    CHECK(csv.find(",0\n") != std::string::npos);  // feasible = 0
}

TEST_CASE("simulation mode replays a stored policy") {
    const fs::path dir = fresh_dir("simulate");
    PolicyMatrix p;
    p.space = StateSpace::make(0, 1);
    p.nu_d = 0.02;
    p.alpha_hat = {{0.7}, {0.8}};
    write_file(dir / "policy.txt", dump_policy(p));

    ExperimentSpec spec = parse_config(
        tiny_config("simulate", "") + "[sim]\nK = 20\nT = 50\n"
        "energy_batches = 5\npolicy_file = " + (dir / "policy.txt").string() +
        "\n");
    spec.output_path = (dir / "sim.csv").string();
    std::ostringstream log;
    CHECK(run_experiment(spec, log) == kExitOk);
    const std::string csv = slurp(dir / "sim.csv");
    CHECK(csv.find("theta_hat") != std::string::npos);
    CHECK(csv.find(",occ_0") != std::string::npos);
    CHECK(csv.find(",occ_1") != std::string::npos);
    CHECK(count_data_rows(csv) == 1);
}

TEST_CASE("validation mode reports analytic/empirical deltas") {
    const fs::path dir = fresh_dir("validate");
    ExperimentSpec spec = parse_config(tiny_config("validate", ""));
    spec.sim.K = 20;
    spec.sim.T = 50;
    spec.sim.energy_batches = 5;
    spec.output_path = (dir / "val.csv").string();
    std::ostringstream log;
    CHECK(run_experiment(spec, log) == kExitOk);
    const std::string csv = slurp(dir / "val.csv");
    CHECK(csv.find("occ_max_dev") != std::string::npos);
    CHECK(csv.find("denergy_db") != std::string::npos);
    CHECK(count_data_rows(csv) == 1);
}

TEST_CASE("process entry point maps failures to documented exit codes") {
    const fs::path dir = fresh_dir("cli");
    std::ostringstream out, err;

    CHECK(cli_main({}, out, err) == kExitParse);  // missing config argument
    CHECK(cli_main({"--help"}, out, err) == kExitOk);
    CHECK(out.str().find("config") != std::string::npos);
    CHECK(cli_main({"/nonexistent/config.ini"}, out, err) == kExitParse);
    CHECK(err.str().find("cannot open") != std::string::npos);

    const fs::path cfg = dir / "exp.ini";
    write_file(cfg, tiny_config("optimize", ""));
    const fs::path result = dir / "cli_out.csv";
    std::ostringstream out2, err2;
    CHECK(cli_main({cfg.string(), "--seed", "3", "--out", result.string()},
                   out2, err2) == kExitOk);
    CHECK(fs::exists(result));
    const std::string csv = slurp(result);
    CHECK(csv.find("# seeds = 3\n") != std::string::npos);

    // A mode override is applied before the run.
    const fs::path result2 = dir / "cli_gm.csv";
    std::ostringstream out3, err3;
    CHECK(cli_main({cfg.string(), "--mode", "gamma-max", "--out",
                    result2.string()},
                   out3, err3) == kExitOk);
    CHECK(slurp(result2).find("gamma_m") != std::string::npos);

    // Config-level failures exit 2; infeasible experiments exit 3.
    const fs::path bad = dir / "bad.ini";
    write_file(bad, kMinimal + "epsilon = 0.9\n");
    std::ostringstream out4, err4;
    CHECK(cli_main({bad.string()}, out4, err4) == kExitParse);
    CHECK(err4.str().find("epsilon") != std::string::npos);

    const fs::path hard = dir / "hard.ini";
    write_file(hard, tiny_config("optimize", "") +
                         "[output]\npath = " + (dir / "hard.csv").string() +
                         "\n");
    std::string hard_text = slurp(hard);
    hard_text.replace(hard_text.find("theta_tar = 0.3"),
                      std::string("theta_tar = 0.3").size(),
                      "theta_tar = 0.005");
    write_file(hard, hard_text);
    std::ostringstream out5, err5;
    CHECK(cli_main({hard.string()}, out5, err5) == kExitInfeasible);

    std::ostringstream out6, err6;
    CHECK(cli_main({cfg.string(), "--bogus"}, out6, err6) == kExitParse);
}
