#include "covfield/error.hpp"

namespace covfield {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MismatchedBase: return "MismatchedBase";
    case ErrorKind::CutLocus: return "CutLocus";
    case ErrorKind::ChartOverflow: return "ChartOverflow";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NotSpd: return "NotSpd";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace covfield
