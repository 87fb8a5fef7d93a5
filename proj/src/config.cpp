#include "pfedac/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pfedac/errors.hpp"

namespace pfedac {

namespace {

const std::set<std::string> kKnownKeys = {
    "version",  "env",        "num_states",     "num_actions",      "feature_dim",
    "num_groups", "states_per_group", "K",      "r",                "d",
    "L",        "T",          "gamma",          "U_r",              "U_omega",
    "zeta",     "c",          "c_theta",        "seed",             "workers",
    "metrics_stride", "burn_in", "mode",        "K_list",           "output_dir",
    "debug_invariants", "trace", "record_wallclock", "actor_successor"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

using KeyValues = std::map<std::string, std::string>;

KeyValues read_pairs(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidValue("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!kKnownKeys.contains(key)) throw UnknownKey("unknown key '" + key + "'");
    if (kv.contains(key)) throw InvalidValue("duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  bool has(const std::string& key) const { return kv_.contains(key); }

  const std::string& raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw MissingKey("missing required key '" + key + "'");
    return it->second;
  }

  long integer(const std::string& key) const {
    const std::string& v = raw(key);
    long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw InvalidValue("key '" + key + "': '" + v + "' is not an integer");
    return out;
  }

  int positive(const std::string& key) const {
    const long v = integer(key);
    if (v < 1 || v > 1'000'000'000) throw InvalidValue("key '" + key + "' must be >= 1");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const std::string& v = raw(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw InvalidValue("key '" + key + "': '" + v + "' is not a nonnegative integer");
    return out;
  }

  double real(const std::string& key) const {
    const std::string& v = raw(key);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
      throw InvalidValue("key '" + key + "': '" + v + "' is not a finite number");
    return out;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidValue("key '" + key + "': expected true or false");
  }

  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    std::istringstream in(raw(key));
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      int v = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size() || v < 1)
        throw InvalidValue("key '" + key + "': '" + item + "' is not a positive integer");
      out.push_back(v);
    }
    if (out.empty()) throw InvalidValue("key '" + key + "' must list at least one value");
    return out;
  }

 private:
  const KeyValues& kv_;
};

constexpr int kMaxDimension = 512;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int RunConfig::max_agents() const {
  if (!sweep) return num_agents;
  return *std::max_element(agent_counts.begin(), agent_counts.end());
}

Federation make_federation(const RunConfig& cfg, int num_agents) {
  if (cfg.env == "lumpable")
    return make_lumpable_federation(cfg.num_groups, cfg.states_per_group, cfg.num_actions,
                                    num_agents, cfg.gamma, cfg.reward_bound, cfg.seed);
  return make_random_federation(cfg.num_states, cfg.num_actions, num_agents, cfg.gamma,
                                cfg.reward_bound, cfg.seed, cfg.feature_dim);
}

Hyperparams make_hyperparams(const RunConfig& cfg) {
  Hyperparams hp;
  hp.horizon = cfg.horizon;
  hp.rank = cfg.rank;
  hp.head_step = cfg.head_step();
  hp.subspace_step = cfg.zeta;
  hp.actor_step = cfg.actor_step();
  hp.radius = cfg.radius;
  hp.mode = cfg.mode;
  hp.actor_successor = cfg.actor_successor;
  hp.workers = cfg.workers;
  hp.debug_invariants = cfg.debug_invariants;
  return hp;
}

RunConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides) {
  KeyValues kv = read_pairs(text);
  for (const auto& [key, value] : overrides) {
    if (!kKnownKeys.contains(key)) throw UnknownKey("unknown override key '" + key + "'");
    kv[key] = value;
  }
  const Reader in(kv);
  RunConfig cfg;

  cfg.version = static_cast<int>(in.integer("version"));
  if (cfg.version != kConfigFormatVersion)
    throw InvalidValue("unsupported config version " + std::to_string(cfg.version));

  cfg.env = in.raw("env");
  cfg.num_actions = in.positive("num_actions");
  if (cfg.env == "random") {
    cfg.num_states = in.positive("num_states");
    cfg.feature_dim = in.has("feature_dim") ? in.positive("feature_dim") : cfg.num_states;
  } else if (cfg.env == "lumpable") {
    cfg.num_groups = in.positive("num_groups");
    cfg.states_per_group = in.positive("states_per_group");
    cfg.num_states = cfg.num_groups * cfg.states_per_group;
    cfg.feature_dim = cfg.num_states;
    if (in.has("num_states") && in.positive("num_states") != cfg.num_states)
      throw InvalidValue("num_states must equal num_groups * states_per_group");
    if (in.has("feature_dim") && in.positive("feature_dim") != cfg.feature_dim)
      throw InvalidValue("lumpable environments use identity features (feature_dim = |S|)");
  } else {
    throw InvalidValue("env must be 'random' or 'lumpable', got '" + cfg.env + "'");
  }
  if (in.has("d") && in.positive("d") != cfg.feature_dim)
    throw InvalidValue("d must equal the feature dimension of the environment (" +
                       std::to_string(cfg.feature_dim) + ")");
  if (cfg.num_states > kMaxDimension || cfg.feature_dim > kMaxDimension)
    throw InvalidValue("|S| and d are capped at " + std::to_string(kMaxDimension));

  const std::string mode = in.raw("mode");
  cfg.sweep = mode == "sweep";
  cfg.mode = cfg.sweep ? Mode::kPfedac : mode_from_string(mode);
  if (cfg.sweep) {
    cfg.agent_counts = in.int_list("K_list");
    if (in.has("K")) cfg.num_agents = in.positive("K");
  } else {
    cfg.num_agents = in.positive("K");
    if (in.has("K_list")) throw InvalidValue("K_list is only valid with mode = sweep");
  }

  cfg.rank = in.positive("r");
  if (cfg.rank > cfg.feature_dim) throw InvalidValue("r must not exceed d");
  cfg.horizon = in.positive("L");
  cfg.rounds = in.positive("T");
  cfg.gamma = in.real("gamma");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw InvalidValue("gamma must lie in (0, 1)");
  cfg.reward_bound = in.has("U_r") ? in.real("U_r") : 1.0;
  if (!(cfg.reward_bound > 0.0)) throw InvalidValue("U_r must be positive");
  cfg.zeta = in.real("zeta");
  cfg.c = in.real("c");
  cfg.c_theta = in.real("c_theta");
  if (!(cfg.zeta >= 0.0) || !(cfg.c >= 0.0) || !(cfg.c_theta >= 0.0))
    throw InvalidValue("zeta, c and c_theta must be nonnegative");
  cfg.seed = in.unsigned_integer("seed");
  cfg.workers = in.has("workers") ? in.positive("workers") : 1;
  if (!in.has("metrics_stride") || in.raw("metrics_stride") == "auto")
    cfg.metrics_stride = cfg.num_states <= 64 ? 1 : 10;
  else
    cfg.metrics_stride = in.positive("metrics_stride");
  if (!in.has("burn_in") || in.raw("burn_in") == "auto") {
    cfg.burn_in = static_cast<int>(std::ceil(0.05 * cfg.rounds));
  } else {
    const long b = in.integer("burn_in");
    if (b < 0 || b >= cfg.rounds) throw InvalidValue("burn_in must lie in [0, T)");
    cfg.burn_in = static_cast<int>(b);
  }
  cfg.output_dir = in.has("output_dir") ? in.raw("output_dir") : "out";
  cfg.debug_invariants = in.has("debug_invariants") && in.boolean("debug_invariants");
  cfg.trace = in.has("trace") && in.boolean("trace");
  cfg.record_wallclock = in.has("record_wallclock") && in.boolean("record_wallclock");
  if (in.has("actor_successor")) {
    const std::string& s = in.raw("actor_successor");
    if (s == "transition")
      cfg.actor_successor = ActorSuccessor::kTransition;
    else if (s == "chain")
      cfg.actor_successor = ActorSuccessor::kChain;
    else
      throw InvalidValue("actor_successor must be 'transition' or 'chain'");
  }

  cfg.radius_auto = !in.has("U_omega") || in.raw("U_omega") == "auto";
  if (cfg.radius_auto) {
    cfg.radius = default_radius(make_federation(cfg, cfg.max_agents()), cfg.horizon);
  } else {
    cfg.radius = in.real("U_omega");
    if (!(cfg.radius > 0.0)) throw InvalidValue("U_omega must be positive");
  }

  const StepsizeCheck check =
      check_stepsize_conditions(cfg.zeta, cfg.reward_bound, cfg.radius, cfg.horizon, cfg.gamma);
  if (!check.ok)
    throw StepsizeConditionViolated("violated " + check.violated + " (zeta = " +
                                    format_double(cfg.zeta) + ", U_omega = " +
                                    format_double(cfg.radius) + ")");
  // Once resolved, the radius is pinned so an echoed config reproduces it.
  cfg.radius_auto = false;
  return cfg;
}

RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), overrides);
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  out << "version = " << cfg.version << '\n';
  out << "env = " << cfg.env << '\n';
  if (cfg.env == "lumpable") {
    out << "num_groups = " << cfg.num_groups << '\n';
    out << "states_per_group = " << cfg.states_per_group << '\n';
  } else {
    out << "num_states = " << cfg.num_states << '\n';
    out << "feature_dim = " << cfg.feature_dim << '\n';
  }
  out << "num_actions = " << cfg.num_actions << '\n';
  out << "mode = " << (cfg.sweep ? "sweep" : to_string(cfg.mode)) << '\n';
  if (cfg.sweep) {
    out << "K_list = ";
    for (std::size_t i = 0; i < cfg.agent_counts.size(); ++i)
      out << (i ? "," : "") << cfg.agent_counts[i];
    out << '\n';
  }
  if (cfg.num_agents > 0) out << "K = " << cfg.num_agents << '\n';
  out << "r = " << cfg.rank << '\n';
  out << "d = " << cfg.feature_dim << '\n';
  out << "L = " << cfg.horizon << '\n';
  out << "T = " << cfg.rounds << '\n';
  out << "gamma = " << format_double(cfg.gamma) << '\n';
  out << "U_r = " << format_double(cfg.reward_bound) << '\n';
  out << "U_omega = " << format_double(cfg.radius) << '\n';
  out << "zeta = " << format_double(cfg.zeta) << '\n';
  out << "c = " << format_double(cfg.c) << '\n';
  out << "c_theta = " << format_double(cfg.c_theta) << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "workers = " << cfg.workers << '\n';
  out << "metrics_stride = " << cfg.metrics_stride << '\n';
  out << "burn_in = " << cfg.burn_in << '\n';
  out << "output_dir = " << cfg.output_dir << '\n';
  out << "debug_invariants = " << (cfg.debug_invariants ? "true" : "false") << '\n';
  out << "trace = " << (cfg.trace ? "true" : "false") << '\n';
  out << "record_wallclock = " << (cfg.record_wallclock ? "true" : "false") << '\n';
  out << "actor_successor = "
      << (cfg.actor_successor == ActorSuccessor::kTransition ? "transition" : "chain") << '\n';
  return out.str();
}

}  // namespace pfedac
