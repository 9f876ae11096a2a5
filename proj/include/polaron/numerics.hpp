#pragma once

#include <cstddef>

namespace polaron {

// Deterministic pairwise reduction of term(i) over [lo, hi).
template <class T, class F>
T pairwise_sum(std::size_t lo, std::size_t hi, const F& term) {
  constexpr std::size_t block = 256;
  if (hi - lo <= block) {
    T s{};
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum<T>(lo, mid, term) + pairwise_sum<T>(mid, hi, term);
}

template <class F>
double psum(std::size_t n, const F& term) {
  return pairwise_sum<double>(0, n, term);
}

}  // namespace polaron
