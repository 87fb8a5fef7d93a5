#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pfedac {

struct VerifyCheck {
  std::string name;
  long checks = 0;
  long violations = 0;
  long skipped = 0;
  double worst_excess = 0.0;

  bool passed() const { return checks > 0 && violations == 0; }
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  long total_checks() const;
  bool passed() const;
};

/// Runs the runtime identity and bound checks on a small seeded lumpable
/// federation with debug invariants on, plus an exact-gradient versus
/// finite-difference comparison on a seeded random federation.
VerifyReport run_verification(std::uint64_t seed, int rounds = 40, int workers = 1);

}  // namespace pfedac
