#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfedac/env.hpp"
#include "pfedac/server.hpp"

namespace pfedac {

inline constexpr int kConfigFormatVersion = 1;

/// Fully resolved run configuration. Every field has a concrete value after
/// parsing; "auto" settings are replaced by what they resolved to.
struct RunConfig {
  int version = kConfigFormatVersion;

  // Environment family.
  std::string env;  // "random" | "lumpable"
  int num_states = 0;
  int num_actions = 0;
  int feature_dim = 0;  // d
  int num_groups = 0;
  int states_per_group = 0;

  int num_agents = 0;  // K
  int rank = 0;        // r
  int horizon = 1;     // L
  int rounds = 0;      // T
  double gamma = 0.0;
  double reward_bound = 1.0;  // U_r
  double radius = 0.0;        // U_omega
  bool radius_auto = true;
  double zeta = 0.0;
  double c = 0.0;        // beta = c * zeta
  double c_theta = 0.0;  // alpha = c_theta * zeta
  std::uint64_t seed = 0;
  int workers = 1;
  int metrics_stride = 1;
  int burn_in = 0;
  Mode mode = Mode::kPfedac;
  bool sweep = false;
  std::vector<int> agent_counts;  // K_list
  std::string output_dir = "out";
  bool debug_invariants = false;
  bool trace = false;
  bool record_wallclock = false;
  ActorSuccessor actor_successor = ActorSuccessor::kTransition;

  double head_step() const { return c * zeta; }
  double actor_step() const { return c_theta * zeta; }
  int max_agents() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Raw key/value overrides applied on top of the file before resolution
/// (CLI flags and environment fallbacks).
using ConfigOverrides = std::map<std::string, std::string>;

/// Parses the flat `key = value` format ('#' starts a comment). Unknown keys,
/// missing required keys, malformed values and stepsize conditions are hard
/// errors (UnknownKey, MissingKey, InvalidValue, StepsizeConditionViolated).
RunConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides = {});
RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides = {});

/// Canonical flat serialization; parse_config_text(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& cfg);

/// Federation with the first `num_agents` agents of the configured family.
Federation make_federation(const RunConfig& cfg, int num_agents);

Hyperparams make_hyperparams(const RunConfig& cfg);

}  // namespace pfedac
