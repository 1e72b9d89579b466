#include "annulus/errors.hpp"

namespace annulus {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::fit: return "fit";
    case ErrorKind::spectrum: return "spectrum";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::positivity: return "positivity";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::support: return "support";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::construction: return "construction";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::factorization: return "factorization";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace annulus
