// SPDX-License-Identifier: Apache-2.0
#include "dnflow/error.hpp"

namespace dnflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ZeroField: return "ZeroField";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NotScalar: return "NotScalar";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::ZeroCollapse: return "ZeroCollapse";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::BadOrder: return "BadOrder";
    case ErrorKind::UnknownDatum: return "UnknownDatum";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace dnflow
