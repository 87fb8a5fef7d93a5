#pragma once

#include <stdexcept>
#include <string>

namespace pfedac {

/// Base class for every error the library raises. `kind()` is the stable,
/// machine-parsable error class printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PFEDAC_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

PFEDAC_DEFINE_ERROR(InvalidValue)
PFEDAC_DEFINE_ERROR(MissingKey)
PFEDAC_DEFINE_ERROR(UnknownKey)
PFEDAC_DEFINE_ERROR(StepsizeConditionViolated)
PFEDAC_DEFINE_ERROR(SingularChain)
PFEDAC_DEFINE_ERROR(RankDeficientAggregate)
PFEDAC_DEFINE_ERROR(DimensionMismatch)
PFEDAC_DEFINE_ERROR(FormatError)
PFEDAC_DEFINE_ERROR(IoError)

#undef PFEDAC_DEFINE_ERROR

}  // namespace pfedac
