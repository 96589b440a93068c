#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pilesort {

/// Sliding-window extremum over the clamped window [i - before, i + after]
/// using a monotonic deque: O(n) regardless of window size. `Better(a, b)`
/// returns true when `a` should replace `b` (std::greater for max,
/// std::less for min).
template <class T, class Better>
void sliding_extremum(std::span<const T> in, std::span<T> out, int before,
                      int after, Better better) {
  const int n = static_cast<int>(in.size());
  if (n == 0) return;
  // Ring buffer of indices; holds at most n entries.
  std::vector<int> dq(static_cast<std::size_t>(n));
  int head = 0;
  int count = 0;
  auto at = [&](int k) -> int& { return dq[(head + k) % n]; };

  for (int j = 0; j < n + after; ++j) {
    if (j < n) {
      while (count > 0 && !better(in[at(count - 1)], in[j])) --count;
      at(count) = j;
      ++count;
    }
    const int i = j - after;
    if (i < 0) continue;
    while (at(0) < i - before) {
      head = (head + 1) % n;
      --count;
    }
    out[i] = in[at(0)];
  }
}

}  // namespace pilesort
