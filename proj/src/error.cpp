#include "awsde/error.hpp"

namespace awsde {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::domain: return "domain";
    case ErrorKind::step_size: return "step_size";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::assumption: return "assumption";
    case ErrorKind::instance_too_large: return "instance_too_large";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

}  // namespace awsde
