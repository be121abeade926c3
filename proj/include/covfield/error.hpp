#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covfield {

enum class ErrorKind {
  MismatchedBase,
  CutLocus,
  ChartOverflow,
  SingularJacobian,
  NotSpd,
  DomainError,
  NoConvergence,
  RankDeficient,
  Validation,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Library exception. Every failure raised by covfield carries a kind so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace covfield
