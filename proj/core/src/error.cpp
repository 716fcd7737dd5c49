#include "wittenlab/error.hpp"

namespace wittenlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_geometry: return "invalid-geometry";
    case ErrorKind::unknown_site: return "unknown-site";
    case ErrorKind::empty_support: return "empty-support";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::convexity_risk: return "convexity-risk";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::unsupported_order: return "unsupported-order";
    case ErrorKind::resource: return "resource";
    case ErrorKind::invalid_grid: return "invalid-grid";
    case ErrorKind::shape: return "shape";
    case ErrorKind::definiteness: return "definiteness";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::measure: return "measure";
    case ErrorKind::arity: return "arity";
    case ErrorKind::support: return "support";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::window: return "window";
    case ErrorKind::assumption_not_met: return "assumption-not-met";
    case ErrorKind::mask_empty: return "mask-empty";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string where, const std::string& message)
    : std::runtime_error(where + ": " + std::string(to_string(kind)) + " error: " + message),
      kind_(kind),
      where_(std::move(where)) {}

void fail(ErrorKind kind, std::string where, const std::string& message) {
  throw Error(kind, std::move(where), message);
}

}  // namespace wittenlab
