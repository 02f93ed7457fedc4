#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "iekf/config.hpp"
#include "iekf/observability.hpp"
#include "iekf/selfcheck.hpp"
#include "iekf/sim.hpp"

using namespace iekf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<int> runs;
};

// IEKF_KIT_THREADS, then the config, then the core count; never above runs.
int resolve_threads(const RunConfig& c) {
  int threads = c.threads;
  if (const char* env = std::getenv("IEKF_KIT_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
      throw Error(ErrorCode::ConfigError, "IEKF_KIT_THREADS must be a positive integer");
    }
    threads = static_cast<int>(v);
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::min(threads, c.runs);
}

void print_summary(const MonteCarloReport& r) {
  std::printf("%-14s %12s %12s %10s %10s %8s\n", "variant", "rmse_pos[m]", "rmse_ang[rad]",
              "nees_pos", "nees_ang", "ok/fail");
  for (const auto& v : r.variants) {
    const Aggregate& a = v.aggregate;
    std::printf("%-14s %12.6f %12.6f %10.4f %10.4f %4zu/%zu\n", v.variant.label().c_str(),
                a.rmse_pos, a.rmse_ang, a.nees_pos, a.nees_ang, a.runs_ok, a.runs_failed);
  }
}

int run_study(const std::string& command, const std::string& path, const Overrides& o) {
  RunConfig c;
  int threads = 1;
  try {
    c = load_config(path);
    if (o.seed) c.scenario.seed = *o.seed;
    if (o.output) c.output_dir = *o.output;
    if (o.runs) c.runs = *o.runs;
    if (command == "simulate") c.runs = 1;
    c.validate();
    threads = resolve_threads(c);
  } catch (const Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  try {
    c.scenario.finalize();
    MonteCarloOptions opts;
    opts.runs = c.runs;
    opts.threads = threads;
    opts.parallel = threads > 1;
    opts.visual_updates = c.visual_updates;
    opts.exact_init = c.exact_init;
    const MonteCarloReport report = run_monte_carlo(c.scenario, c.variants, opts);
    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    write_report(c.output_dir, report, meta_json(c, command));
    print_summary(report);
    for (const auto& v : report.variants) {
      if (v.aggregate.runs_ok == 0) {
        std::fprintf(stderr, "error: every run of %s failed\n", v.variant.label().c_str());
        return kExitRuntime;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

int run_selfcheck(const std::string& filter) {
  std::vector<CheckResult> results;
  try {
    results = run_selfchecks(filter);
  } catch (const Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-22s %s  %s  (%.2f s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.detail.c_str(), r.seconds);
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int run_observability(double dt, int k) {
  ObservabilityResult r;
  try {
    r = observability_matrix(dt, k, Vec3(0.0, 0.0, -9.81));
  } catch (const Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  std::printf("O: %td x %td (dt = %g, k = %d)\nsingular values:", r.O.rows(), r.O.cols(), dt, k);
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    std::printf(" %.6e", r.singular_values(i));
  }
  std::printf("\nrank: %d\nnullspace dimension: %d\n", r.rank, r.nullspace_dim);
  std::printf("nullspace basis (rows: theta, p, v, f):\n");
  for (Eigen::Index i = 0; i < r.nullspace.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.nullspace.cols(); ++j) {
      std::printf(" % .6f", std::abs(r.nullspace(i, j)) < 5e-13 ? 0.0 : r.nullspace(i, j));
    }
    std::printf("\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant EKF / MSCKF simulation kit"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  std::uint64_t seed = 0;
  std::string output;
  int runs = 0;
  const auto add_study = [&](const char* name, const char* help, bool with_runs) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("config", config_path, "JSON config file")->required();
    cmd->add_option("--seed", seed, "override scenario.seed");
    cmd->add_option("--output", output, "override execution.output_dir");
    if (with_runs) cmd->add_option("--runs", runs, "override execution.runs");
    return cmd;
  };
  CLI::App* simulate = add_study("simulate", "one run of every configured variant", false);
  CLI::App* montecarlo = add_study("montecarlo", "Monte-Carlo study of every variant", true);

  std::string filter;
  CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the numerical oracles");
  selfcheck->add_option("--filter", filter, "run only checks with this name or prefix");

  double dt = 0.1;
  int k = 5;
  CLI::App* observability = app.add_subcommand("observability", "rank of the observability matrix");
  observability->add_option("--dt", dt, "time between observations [s]");
  observability->add_option("--k", k, "number of stacked observations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (CLI::App* cmd : {simulate, montecarlo}) {
    if (!cmd->parsed()) continue;
    if (cmd->count("--seed")) overrides.seed = seed;
    if (cmd->count("--output")) overrides.output = output;
    if (cmd == montecarlo && cmd->count("--runs")) overrides.runs = runs;
    return run_study(cmd->get_name(), config_path, overrides);
  }
  if (selfcheck->parsed()) return run_selfcheck(filter);
  if (observability->parsed()) return run_observability(dt, k);
  return kExitConfig;
}
