#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wittenlab {

enum class ErrorKind {
  invalid_geometry,
  unknown_site,
  empty_support,
  invalid_parameter,
  convexity_risk,
  evaluation,
  unsupported_order,
  resource,
  invalid_grid,
  shape,
  definiteness,
  non_convergence,
  measure,
  arity,
  support,
  insufficient_data,
  invalid_input,
  window,
  assumption_not_met,
  mask_empty,
  config,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `where()` names the module and
/// operation ("witten.solve_w1") so front-ends can report it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

[[noreturn]] void fail(ErrorKind kind, std::string where, const std::string& message);

}  // namespace wittenlab
