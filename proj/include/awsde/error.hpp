#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace awsde {

enum class ErrorKind {
  configuration,
  domain,
  step_size,
  numerical,
  assumption,
  instance_too_large,
  usage,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind()` is what the CLI reports
// in its machine-readable error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace awsde
