#include "pfedac/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pfedac/errors.hpp"

namespace pfedac {

namespace {

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string metrics_csv(const std::vector<RoundMetrics>& rows) {
  std::string out = std::string(kMetricsHeader) + '\n';
  for (const RoundMetrics& m : rows) {
    out += std::to_string(m.round) + ',' + real(m.x_bar) + ',' +
           (m.pad_frob_sq ? real(*m.pad_frob_sq) : std::string()) + ',' + real(m.g_bar) + ',' +
           real(m.q_frob) + ',' + real(m.r_dev) + ',' + std::to_string(m.clamp_count) + ',' +
           real(m.wallclock_ms) + '\n';
  }
  return out;
}

std::string trace_csv_header() {
  return "round,agent,abs_delta,max_abs_actor_delta,clamped,gradient_estimate_norm,resets\n";
}

std::string trace_csv_rows(const RoundReport& report) {
  std::string out;
  for (std::size_t k = 0; k < report.agents.size(); ++k) {
    const AgentRoundRecord& a = report.agents[k];
    out += std::to_string(report.round) + ',' + std::to_string(k) + ',' + real(a.abs_delta) + ',' +
           real(a.max_abs_actor_delta) + ',' + (a.clamped ? "1" : "0") + ',' +
           real(a.gradient_estimate_norm) + ',' + std::to_string(a.resets) + '\n';
  }
  return out;
}

nlohmann::json sweep_summary_json(const SweepSummary& summary, const RunConfig& cfg,
                                  const std::string& federation_hash) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& row : summary.rows) {
    rows.push_back({{"K", row.num_agents},
                    {"x_bar_T", row.averages.x_bar},
                    {"g_bar_T", row.averages.g_bar},
                    {"pad_T", optional_json(row.averages.pad)},
                    {"final_pad", row.final_pad},
                    {"rows_averaged", row.averages.rows}});
  }
  return {{"format", "pfedac-sweep"},
          {"version", 1},
          {"rows", rows},
          {"x_bar_non_increasing", summary.x_monotone},
          {"g_bar_non_increasing", summary.g_monotone},
          {"monotone", summary.x_monotone && summary.g_monotone},
          {"burn_in", cfg.burn_in},
          {"T", cfg.rounds},
          {"federation_hash", federation_hash},
          {"config", to_config_text(cfg)}};
}

nlohmann::json invariant_report_json(const InvariantTally& tally) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, e] : tally.entries()) {
    out[name] = {{"checks", e.checks},
                 {"violations", e.violations},
                 {"worst_excess", e.worst_excess},
                 {"skipped", e.skipped}};
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace pfedac
