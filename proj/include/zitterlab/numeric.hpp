#pragma once

#include "zitterlab/types.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace zitterlab {

namespace detail {

template <typename Scalar>
Scalar pairwise_sum(const Scalar* data, std::size_t n) {
  if (n <= 16) {
    Scalar acc(0);
    for (std::size_t i = 0; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

}  // namespace detail

/// Fixed-order pairwise summation. The association tree depends only on the
/// length of the input, so results are reproducible to the bit.
template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const auto flat = values.derived().reshaped();
  std::vector<Scalar> buffer(static_cast<std::size_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) buffer[static_cast<std::size_t>(i)] = flat(i);
  return detail::pairwise_sum(buffer.data(), buffer.size());
}

/// Runs body(begin, end) over [0, count) split into fixed-size blocks. Block
/// boundaries never depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

/// Worker count used by parallel_for; defaults to the hardware concurrency
/// or the ZITTERLAB_THREADS environment variable when set.
std::size_t worker_count();
void set_worker_count(std::size_t workers);

using WarningHandler = std::function<void(const std::string&)>;

/// Installs a sink for non-fatal diagnostics and returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace zitterlab
