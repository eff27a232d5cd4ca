#ifndef OSL_ERROR_HPP
#define OSL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace osl {

enum class ErrorKind {
  RankDeficient,
  AmbientMismatch,
  NotTransverse,
  NotComplementary,
  ZeroVector,
  NotGeneralPosition,
  NotInvertible,
  Overflow,
  DomainError,
  HorizonTooShort,
  SeparationFailure,
  SubsetBlowup,
  HypothesisFailure,
  DeltaTooLarge,
  NotPositiveDefinite,
  InvalidSpec,
  InsufficientData,
  EmptyBlock,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace osl

#endif  // OSL_ERROR_HPP
