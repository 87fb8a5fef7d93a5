#include "pfedac/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/sha.h>

#include "pfedac/errors.hpp"
#include "pfedac/rng.hpp"

namespace pfedac {

namespace {

constexpr double kMixingFloor = 0.05;
constexpr double kRowTolerance = 1e-12;

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidValue(message);
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

bool operator==(const FiniteMdp& a, const FiniteMdp& b) {
  return same(a.transitions_, b.transitions_) && same(a.rewards_, b.rewards_) &&
         a.discount_ == b.discount_ && a.reward_bound_ == b.reward_bound_;
}

bool operator==(const FeatureMap& a, const FeatureMap& b) { return same(a.matrix, b.matrix); }

bool operator==(const Federation& a, const Federation& b) {
  if (a.b_star.has_value() != b.b_star.has_value()) return false;
  if (a.b_star && !same(*a.b_star, *b.b_star)) return false;
  return a.agents == b.agents && a.features == b.features &&
         same(a.initial_dist, b.initial_dist) && a.policy_rows == b.policy_rows &&
         a.generator == b.generator;
}

FiniteMdp::FiniteMdp(Eigen::MatrixXd transitions, Eigen::MatrixXd rewards, double discount,
                     double reward_bound)
    : transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      discount_(discount),
      reward_bound_(reward_bound) {
  validate();
}

void FiniteMdp::validate() const {
  require(rewards_.rows() >= 1 && rewards_.cols() >= 1, "MDP needs at least one state and action");
  require(transitions_.rows() == rewards_.rows() * rewards_.cols() &&
              transitions_.cols() == rewards_.rows(),
          "transition tensor shape does not match reward table");
  require(discount_ > 0.0 && discount_ < 1.0, "discount must lie in (0, 1)");
  require(reward_bound_ > 0.0, "reward bound must be positive");
  require((transitions_.array() >= 0.0).all(), "transition probabilities must be nonnegative");
  const Eigen::VectorXd sums = transitions_.rowwise().sum();
  require(((sums.array() - 1.0).abs() <= kRowTolerance).all(),
          "every transition row must sum to 1");
  require(rewards_.cwiseAbs().maxCoeff() <= reward_bound_, "reward exceeds reward bound");
}

FeatureMap FeatureMap::identity(int num_states) {
  return {Eigen::MatrixXd::Identity(num_states, num_states)};
}

int Federation::num_policy_rows() const {
  return policy_rows.empty() ? 0 : *std::max_element(policy_rows.begin(), policy_rows.end()) + 1;
}

void Federation::validate() const {
  require(!agents.empty(), "federation needs at least one agent");
  const auto& first = agents.front();
  for (const auto& mdp : agents) {
    mdp.validate();
    require(mdp.num_states() == first.num_states() && mdp.num_actions() == first.num_actions() &&
                mdp.discount() == first.discount(),
            "agents must share |S|, |A| and gamma");
  }
  require(features.num_states() == first.num_states(), "feature map has wrong number of rows");
  require(features.max_row_norm() <= 1.0 + 1e-12, "feature rows must have norm <= 1");
  require(initial_dist.size() == first.num_states(), "initial distribution has wrong length");
  require((initial_dist.array() >= 0.0).all() && std::abs(initial_dist.sum() - 1.0) <= 1e-12,
          "initial distribution must be a probability vector");
  require(static_cast<int>(policy_rows.size()) == first.num_states(),
          "policy row map has wrong length");
  std::set<int> rows(policy_rows.begin(), policy_rows.end());
  require(*rows.begin() == 0 && *rows.rbegin() == static_cast<int>(rows.size()) - 1,
          "policy rows must cover 0..n-1");
  if (b_star) {
    require(b_star->rows() == features.dim(), "B* has wrong ambient dimension");
    const Eigen::MatrixXd gram = b_star->transpose() * *b_star;
    require((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <=
                1e-10,
            "B* must be orthonormal");
  }
}

Eigen::MatrixXd mix_with_reset(const Eigen::MatrixXd& transitions, const Eigen::VectorXd& eta,
                               double weight) {
  Eigen::MatrixXd out = weight * transitions;
  out.rowwise() += (1.0 - weight) * eta.transpose();
  return out;
}

FiniteMdp companion_kernel(const FiniteMdp& mdp, const Eigen::VectorXd& eta) {
  if (eta.size() != mdp.num_states()) throw DimensionMismatch("eta has wrong length");
  return FiniteMdp(mix_with_reset(mdp.transitions(), eta, mdp.discount()), mdp.rewards(),
                   mdp.discount(), mdp.reward_bound());
}

Federation make_random_federation(int num_states, int num_actions, int num_agents, double gamma,
                                  double reward_bound, std::uint64_t seed, int feature_dim) {
  require(num_states >= 1 && num_actions >= 1 && num_agents >= 1, "sizes must be >= 1");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(reward_bound > 0.0, "reward bound must be positive");
  if (feature_dim < 0) feature_dim = num_states;
  require(feature_dim >= 1, "feature dimension must be >= 1");

  Federation fed;
  const double uniform_mass = kMixingFloor / num_states;
  for (int k = 0; k < num_agents; ++k) {
    Rng rng(seed, StreamRole::kEnvAgent, static_cast<std::uint64_t>(k));
    Eigen::MatrixXd p(num_states * num_actions, num_states);
    for (int row = 0; row < p.rows(); ++row)
      p.row(row) = ((1.0 - kMixingFloor) * rng.dirichlet(num_states).array() + uniform_mass)
                       .matrix()
                       .transpose();
    Eigen::MatrixXd r(num_states, num_actions);
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) r(s, a) = rng.uniform(-reward_bound, reward_bound);
    fed.agents.emplace_back(std::move(p), std::move(r), gamma, reward_bound);
  }

  Rng shared(seed, StreamRole::kEnvShared);
  Eigen::MatrixXd phi = shared.gaussian_matrix(num_states, feature_dim);
  const double max_norm = phi.rowwise().norm().maxCoeff();
  phi /= max_norm;
  fed.features.matrix = std::move(phi);
  fed.initial_dist = Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
  fed.policy_rows.resize(num_states);
  for (int s = 0; s < num_states; ++s) fed.policy_rows[s] = s;
  fed.generator = {"random",
                   seed,
                   {{"num_states", num_states},
                    {"num_actions", num_actions},
                    {"num_agents", num_agents},
                    {"gamma", gamma},
                    {"reward_bound", reward_bound},
                    {"feature_dim", feature_dim}}};
  return fed;
}

Federation make_lumpable_federation(int num_groups, int states_per_group, int num_actions,
                                    int num_agents, double gamma, double reward_bound,
                                    std::uint64_t seed) {
  require(num_groups >= 1 && states_per_group >= 1 && num_actions >= 1 && num_agents >= 1,
          "sizes must be >= 1");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(reward_bound > 0.0, "reward bound must be positive");
  const int num_states = num_groups * states_per_group;
  const auto group_of = [states_per_group](int s) { return s / states_per_group; };
  const double uniform_mass = kMixingFloor / num_states;

  Federation fed;
  for (int k = 0; k < num_agents; ++k) {
    Rng rng(seed, StreamRole::kEnvAgent, static_cast<std::uint64_t>(k));
    // Group-level kernel and rewards: one draw per (group, action).
    std::vector<Eigen::VectorXd> group_kernel(num_groups * num_actions);
    Eigen::MatrixXd group_reward(num_groups, num_actions);
    for (int g = 0; g < num_groups; ++g)
      for (int a = 0; a < num_actions; ++a) {
        group_kernel[g * num_actions + a] = rng.dirichlet(num_groups);
        group_reward(g, a) = rng.uniform(-reward_bound, reward_bound);
      }
    // Within the target group the landing state may depend on the full state.
    Eigen::MatrixXd p(num_states * num_actions, num_states);
    Eigen::MatrixXd r(num_states, num_actions);
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) {
        const Eigen::VectorXd& into = group_kernel[group_of(s) * num_actions + a];
        for (int g = 0; g < num_groups; ++g) {
          const Eigen::VectorXd within = rng.dirichlet(states_per_group);
          for (int i = 0; i < states_per_group; ++i)
            p(s * num_actions + a, g * states_per_group + i) =
                (1.0 - kMixingFloor) * into(g) * within(i) + uniform_mass;
        }
        r(s, a) = group_reward(group_of(s), a);
      }
    fed.agents.emplace_back(std::move(p), std::move(r), gamma, reward_bound);
  }

  fed.features = FeatureMap::identity(num_states);
  fed.initial_dist = Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
  Eigen::MatrixXd b_star = Eigen::MatrixXd::Zero(num_states, num_groups);
  const double level = 1.0 / std::sqrt(static_cast<double>(states_per_group));
  fed.policy_rows.resize(num_states);
  for (int s = 0; s < num_states; ++s) {
    b_star(s, group_of(s)) = level;
    fed.policy_rows[s] = group_of(s);
  }
  fed.b_star = std::move(b_star);
  fed.generator = {"lumpable",
                   seed,
                   {{"num_groups", num_groups},
                    {"states_per_group", states_per_group},
                    {"num_actions", num_actions},
                    {"num_agents", num_agents},
                    {"gamma", gamma},
                    {"reward_bound", reward_bound}}};
  return fed;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw FormatError("matrix data length does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[i * cols + j2].get<double>();
  return m;
}

}  // namespace

nlohmann::json federation_to_json(const Federation& fed) {
  nlohmann::json doc;
  doc["format"] = "pfedac-federation";
  doc["version"] = kFederationFormatVersion;
  doc["generator"] = {{"name", fed.generator.name},
                      {"seed", fed.generator.seed},
                      {"params", fed.generator.params}};
  doc["num_states"] = fed.num_states();
  doc["num_actions"] = fed.num_actions();
  doc["discount"] = fed.discount();
  doc["features"] = matrix_to_json(fed.features.matrix);
  doc["initial_dist"] = matrix_to_json(fed.initial_dist);
  doc["policy_rows"] = fed.policy_rows;
  doc["b_star"] = fed.b_star ? matrix_to_json(*fed.b_star) : nlohmann::json(nullptr);
  auto& agents = doc["agents"] = nlohmann::json::array();
  for (const auto& mdp : fed.agents)
    agents.push_back({{"transitions", matrix_to_json(mdp.transitions())},
                      {"rewards", matrix_to_json(mdp.rewards())},
                      {"reward_bound", mdp.reward_bound()}});
  return doc;
}

Federation federation_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "pfedac-federation")
      throw FormatError("not a federation document");
    if (doc.at("version").get<int>() != kFederationFormatVersion)
      throw FormatError("unsupported federation format version");
    Federation fed;
    const auto& gen = doc.at("generator");
    fed.generator = {gen.at("name").get<std::string>(), gen.at("seed").get<std::uint64_t>(),
                     gen.at("params")};
    const double discount = doc.at("discount").get<double>();
    for (const auto& a : doc.at("agents"))
      fed.agents.emplace_back(matrix_from_json(a.at("transitions")),
                              matrix_from_json(a.at("rewards")), discount,
                              a.at("reward_bound").get<double>());
    fed.features.matrix = matrix_from_json(doc.at("features"));
    fed.initial_dist = matrix_from_json(doc.at("initial_dist"));
    fed.policy_rows = doc.at("policy_rows").get<std::vector<int>>();
    if (!doc.at("b_star").is_null()) fed.b_star = matrix_from_json(doc.at("b_star"));
    fed.validate();
    return fed;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed federation document: ") + e.what());
  }
}

void save_federation(const Federation& fed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << federation_to_json(fed).dump(2) << '\n';
}

Federation load_federation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return federation_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("cannot parse ") + path + ": " + e.what());
  }
}

std::string federation_content_hash(const Federation& fed) {
  const std::string body = federation_to_json(fed).dump();
  const std::string blob = "blob " + std::to_string(body.size()) + '\0' + body;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream hex;
  for (unsigned char byte : digest) {
    constexpr char kHex[] = "0123456789abcdef";
    hex << kHex[byte >> 4] << kHex[byte & 0xF];
  }
  return hex.str();
}

}  // namespace pfedac
