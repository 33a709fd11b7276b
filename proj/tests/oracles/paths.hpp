#pragma once

// Brute force over hop tuples: J^{*k}(q) = sum over (d_1..d_k) with
// d_1 + ... + d_k = q of prod J(d_i), hops restricted to 0 < |d| <= M.
// Exponential in k; only for tiny cases.

#include <gmpxx.h>

#include <functional>
#include <vector>

namespace oracle {

inline mpq_class path_sum(const std::function<mpq_class(long)> &J, long M, int k, long q)
{
  std::vector<long> hops;
  for (long d = -M; d <= M; ++d)
    if (d != 0)
      hops.push_back(d);
  mpq_class total = 0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  if (k == 0)
    return q == 0 ? 1 : 0;
  for (;;) {
    long pos = 0;
    mpq_class w = 1;
    for (int i = 0; i < k; ++i) {
      pos += hops[idx[i]];
      w *= J(hops[idx[i]]);
    }
    if (pos == q)
      total += w;
    int i = 0;
    while (i < k && ++idx[i] == hops.size())
      idx[i++] = 0;
    if (i == k)
      break;
  }
  return total;
}

// count of k-step +-1 walks ending at q: all tuples in {+1,-1}^k
inline long nn_walks(int k, long q)
{
  long count = 0;
  for (long mask = 0; mask < (1L << k); ++mask) {
    long pos = 0;
    for (int i = 0; i < k; ++i)
      pos += (mask >> i) & 1 ? 1 : -1;
    count += pos == q;
  }
  return count;
}

} // namespace oracle
