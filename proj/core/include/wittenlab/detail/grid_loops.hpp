#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "wittenlab/detail/parallel.hpp"
#include "wittenlab/grid.hpp"

namespace wittenlab::detail {

/// Calls body(start, stride) for every grid line along `axis`; the nodes of a
/// line are start + k·stride for k in [0, m).
template <class F>
void for_lines(const GridSpec& g, std::size_t axis, F&& body) {
  const std::size_t m = static_cast<std::size_t>(g.points_per_site);
  const std::size_t stride = g.strides[axis];
  const std::size_t lines = g.total_points / m;
  parallel_for(lines, [&](std::size_t l) {
    const std::size_t outer = l / stride;
    const std::size_t inner = l % stride;
    body(outer * stride * m + inner, stride);
  });
}

/// Calls body(index, coordinates) for every node.
template <class F>
void for_nodes(const GridSpec& g, F&& body) {
  const std::size_t n = g.total_points;
  const std::size_t blocks = (n + reduction_block - 1) / reduction_block;
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> x(g.dims());
    const std::size_t lo = b * reduction_block;
    const std::size_t hi = std::min(n, lo + reduction_block);
    for (std::size_t i = lo; i < hi; ++i) {
      g.node(i, x);
      body(i, std::span<const double>(x));
    }
  });
}

/// out += Δ_h u along every axis, zero values outside the box.
inline void add_laplacian(const GridSpec& g, int order, const double* u, double* out) {
  const int m = g.points_per_site;
  const double h2 = g.spacing * g.spacing;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    for_lines(g, a, [&](std::size_t start, std::size_t s) {
      auto at = [&](int k) {
        return (k < 0 || k >= m) ? 0.0 : u[start + static_cast<std::size_t>(k) * s];
      };
      for (int k = 0; k < m; ++k) {
        const double d =
            order == 4
                ? (-at(k - 2) + 16.0 * at(k - 1) - 30.0 * at(k) + 16.0 * at(k + 1) - at(k + 2)) /
                      (12.0 * h2)
                : (at(k - 1) - 2.0 * at(k) + at(k + 1)) / h2;
        out[start + static_cast<std::size_t>(k) * s] += d;
      }
    });
  }
}

/// Diagonal entry of -Δ_h.
inline double laplacian_diagonal(const GridSpec& g, int order) {
  const double h2 = g.spacing * g.spacing;
  const double per_axis = order == 4 ? 30.0 / (12.0 * h2) : 2.0 / h2;
  return per_axis * static_cast<double>(g.dims());
}

}  // namespace wittenlab::detail
