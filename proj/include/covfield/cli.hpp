#pragma once

#include "covfield/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace covfield {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// 2 for input problems (validation, parse, I/O, base or cut-locus
/// violations), 3 for numerical failures.
int exit_code(ErrorKind kind);

/// Entry point of the covfield tool; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace covfield
