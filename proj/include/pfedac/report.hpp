#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfedac/config.hpp"
#include "pfedac/server.hpp"

namespace pfedac {

inline constexpr const char* kMetricsHeader =
    "round,x_bar,pad_frob_sq,g_bar,q_frob,r_dev,clamp_count,wallclock_ms";

/// One CSV line per measured round; reals use %.17g so output is
/// byte-identical across runs with the same seed.
std::string metrics_csv(const std::vector<RoundMetrics>& rows);

std::string trace_csv_header();
std::string trace_csv_rows(const RoundReport& report);

nlohmann::json sweep_summary_json(const SweepSummary& summary, const RunConfig& cfg,
                                  const std::string& federation_hash);

nlohmann::json invariant_report_json(const InvariantTally& tally);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace pfedac
