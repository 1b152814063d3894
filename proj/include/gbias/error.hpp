#pragma once

#include <stdexcept>
#include <string>

namespace gbias {

enum class ErrorKind {
  invalid_order,
  validation,
  resource,
  wrong_variant,
  shape_mismatch,
  parse,
  infeasible,
  numerical,
  config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_order: return "invalid_order";
    case ErrorKind::validation: return "validation";
    case ErrorKind::resource: return "resource";
    case ErrorKind::wrong_variant: return "wrong_variant";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::parse: return "parse";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so the CLI can map it
/// to an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gbias
