#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "wittenlab/error.hpp"
#include "wittenlab/lattice.hpp"

namespace testing {

/// The error kind thrown by `f`, or nothing when it returns normally.
template <class F>
std::optional<wittenlab::ErrorKind> raised(F&& f) {
  try {
    f();
  } catch (const wittenlab::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::shared_ptr<const wittenlab::LatticeSpec> chain(int n) {
  const int shape[] = {n};
  return std::make_shared<const wittenlab::LatticeSpec>(wittenlab::build_lattice(1, shape));
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace testing
