#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pfedac/config.hpp"
#include "pfedac/errors.hpp"
#include "pfedac/oracle.hpp"
#include "pfedac/report.hpp"
#include "pfedac/server.hpp"
#include "pfedac/verify.hpp"

namespace fs = std::filesystem;
using namespace pfedac;

namespace {

constexpr int kExitVerifyFailed = 12;

int exit_code_for(const std::string& kind) {
  static const std::map<std::string, int> codes = {
      {"InvalidValue", 3},          {"MissingKey", 4},
      {"UnknownKey", 5},            {"StepsizeConditionViolated", 6},
      {"SingularChain", 7},         {"RankDeficientAggregate", 8},
      {"DimensionMismatch", 9},     {"FormatError", 10},
      {"IoError", 11}};
  auto it = codes.find(kind);
  return it == codes.end() ? 1 : it->second;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string output;
  bool debug_invariants = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Path to the run configuration")->required();
  cmd->add_option("--seed", f.seed, "Override the root seed");
  cmd->add_option("--workers", f.workers, "Worker threads (fallback: PFEDAC_WORKERS)");
  cmd->add_option("--output", f.output, "Override output_dir");
  cmd->add_flag("--debug-invariants", f.debug_invariants, "Assert runtime invariants");
}

ConfigOverrides overrides_from(const CommonFlags& f) {
  ConfigOverrides o;
  if (f.seed) o["seed"] = std::to_string(*f.seed);
  if (f.workers) {
    o["workers"] = std::to_string(*f.workers);
  } else if (const char* env = std::getenv("PFEDAC_WORKERS"); env && *env) {
    o["workers"] = env;
  }
  if (!f.output.empty()) o["output_dir"] = f.output;
  if (f.debug_invariants) o["debug_invariants"] = "true";
  return o;
}

RunConfig load(const CommonFlags& f) {
  RunConfig cfg = parse_config(f.config, overrides_from(f));
  fs::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir + "/config.input", read_text_file(f.config));
  write_text_file(cfg.output_dir + "/config.resolved", to_config_text(cfg));
  return cfg;
}

int write_invariants(const RunConfig& cfg, const InvariantTally& tally) {
  if (!cfg.debug_invariants) return 0;
  write_text_file(cfg.output_dir + "/invariants.json",
                  invariant_report_json(tally).dump(2) + "\n");
  if (tally.total_violations() > 0) {
    std::cerr << "error: InvariantViolated: " << tally.total_violations() << " of "
              << tally.total_checks() << " runtime checks failed\n";
    return kExitVerifyFailed;
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) throw InvalidValue("sweep requires mode = sweep and K_list");
  const SweepSummary summary =
      speedup_sweep(cfg.agent_counts, cfg.rounds, cfg.burn_in, cfg.metrics_stride,
                    make_hyperparams(cfg), cfg.seed,
                    [&](int k) { return make_federation(cfg, k); });
  const std::string hash = federation_content_hash(make_federation(cfg, cfg.max_agents()));
  write_text_file(cfg.output_dir + "/summary.json",
                  sweep_summary_json(summary, cfg, hash).dump(2) + "\n");
  for (const SweepRow& row : summary.rows)
    std::printf("K=%d x_bar_T=%.6g g_bar_T=%.6g\n", row.num_agents, row.averages.x_bar,
                row.averages.g_bar);
  std::printf("monotone=%s\n", summary.x_monotone && summary.g_monotone ? "true" : "false");
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  if (cfg.sweep) return cmd_sweep(cfg);
  const Federation fed = make_federation(cfg, cfg.num_agents);
  save_federation(fed, cfg.output_dir + "/federation.json");
  Simulation sim(fed, make_hyperparams(cfg), cfg.seed);

  std::string trace = cfg.trace ? trace_csv_header() : std::string();
  std::function<void(const RoundReport&)> on_round;
  if (cfg.trace) on_round = [&](const RoundReport& r) { trace += trace_csv_rows(r); };
  const auto rows = sim.run(cfg.rounds, cfg.metrics_stride, on_round, cfg.record_wallclock);

  write_text_file(cfg.output_dir + "/metrics.csv", metrics_csv(rows));
  if (cfg.trace) write_text_file(cfg.output_dir + "/trace.csv", trace);
  const nlohmann::json run = {{"federation_hash", federation_content_hash(fed)},
                              {"mode", to_string(cfg.mode)},
                              {"rows", rows.size()},
                              {"final_x_bar", rows.back().x_bar},
                              {"final_g_bar", rows.back().g_bar}};
  write_text_file(cfg.output_dir + "/run.json", run.dump(2) + "\n");
  std::printf("rounds=%d rows=%zu final x_bar=%.6g g_bar=%.6g\n", cfg.rounds, rows.size(),
              rows.back().x_bar, rows.back().g_bar);
  return write_invariants(cfg, sim.invariants());
}

int cmd_check_assumptions(const RunConfig& cfg) {
  const Federation fed = make_federation(cfg, cfg.max_agents());
  const std::vector<SoftmaxPolicy> policies(
      fed.num_agents(), SoftmaxPolicy::uniform(fed.num_actions(), fed.policy_rows));
  const AssumptionReport report =
      check_assumptions(fed, policies, fed.features, cfg.horizon, cfg.rank);
  const std::string text = report.to_json().dump(2) + "\n";
  write_text_file(cfg.output_dir + "/assumptions.json", text);
  std::cout << text;
  return 0;
}

int cmd_verify(std::uint64_t seed, int workers) {
  const VerifyReport report = run_verification(seed, 40, workers);
  for (const VerifyCheck& c : report.checks)
    std::printf("%s %s checks=%ld violations=%ld skipped=%ld worst_excess=%.3g\n",
                c.passed() ? "PASS" : "FAIL", c.name.c_str(), c.checks, c.violations, c.skipped,
                c.worst_excess);
  std::printf("identity checks: %ld\n", report.total_checks());
  return report.passed() ? 0 : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized federated actor-critic simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, assume_flags;
  add_common(app.add_subcommand("run", "Run one federation and write metrics.csv"), run_flags);
  add_common(app.add_subcommand("sweep", "Sweep K and write summary.json"), sweep_flags);
  add_common(app.add_subcommand("check-assumptions", "Report assumption diagnostics"),
             assume_flags);
  auto* verify = app.add_subcommand("verify", "Run the identity and invariant suite");
  std::uint64_t verify_seed = 0;
  std::optional<int> verify_workers;
  verify->add_option("--seed", verify_seed, "Fixture seed");
  verify->add_option("--workers", verify_workers, "Worker threads (fallback: PFEDAC_WORKERS)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run")) return cmd_run(load(run_flags));
    if (app.got_subcommand("sweep")) return cmd_sweep(load(sweep_flags));
    if (app.got_subcommand("check-assumptions")) return cmd_check_assumptions(load(assume_flags));
    int workers = 1;
    if (verify_workers) {
      workers = *verify_workers;
    } else if (const char* env = std::getenv("PFEDAC_WORKERS"); env && *env) {
      workers = std::max(1, std::atoi(env));
    }
    return cmd_verify(verify_seed, workers);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return exit_code_for("IoError");
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
}
