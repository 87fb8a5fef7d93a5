#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace pfedac {

/// Purpose tags for stream derivation. Every random draw in a run comes from
/// a stream identified by (root seed, index, role); streams never depend on
/// the round, so agents can be stepped by any worker in any order.
enum class StreamRole : std::uint64_t {
  kEnvShared = 1,
  kEnvAgent = 2,
  kCritic = 3,
  kActor = 4,
  kInitSubspace = 5,
  kFixture = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t root, StreamRole role,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(root ^ (static_cast<std::uint64_t>(role) << 56)) + index);
}

/// Deterministic random stream. All distributions are implemented here on top
/// of the raw 64-bit engine so results do not depend on the standard
/// library's distribution algorithms.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, StreamRole role, std::uint64_t index = 0)
      : engine_(stream_seed(root, role, index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(1.0 - uniform()); }

  /// Inverse-CDF draw from a probability vector (entries assumed >= 0, sum 1).
  template <typename Derived>
  int categorical(const Eigen::DenseBase<Derived>& probs) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      const double p = probs(i);
      if (p <= 0.0) continue;
      last_positive = static_cast<int>(i);
      acc += p;
      if (u < acc) return static_cast<int>(i);
    }
    return last_positive;
  }

  /// Symmetric Dirichlet(1, ..., 1) draw of length n.
  Eigen::VectorXd dirichlet(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = exponential();
    return v / v.sum();
  }

  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pfedac
