#pragma once

#include <cstddef>
#include <vector>

namespace wittenlab::detail {

template <class F>
void parallel_for(std::size_t n, F&& body) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

inline constexpr std::size_t reduction_block = 4096;

/// Σ term(i) over [0, n). Blocks of fixed size are summed in order, then the
/// block sums are combined pairwise, so the result does not depend on the
/// thread count.
template <class F>
double deterministic_sum(std::size_t n, F&& term) {
  if (n == 0) return 0.0;
  const std::size_t blocks = (n + reduction_block - 1) / reduction_block;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * reduction_block;
    const std::size_t hi = lo + reduction_block < n ? lo + reduction_block : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[b] = s;
  });
  for (std::size_t width = 1; width < blocks; width *= 2) {
    for (std::size_t i = 0; i + width < blocks; i += 2 * width) partial[i] += partial[i + width];
  }
  return partial[0];
}

}  // namespace wittenlab::detail
