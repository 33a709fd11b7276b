#pragma once

// sum_{d>=1} d^{-s} from a partial sum to N plus the Euler-Maclaurin tail
// N^{1-s}/(s-1) + N^{-s}/2 + s N^{-s-1}/12 (error below N^{-s-3}).

#include <cmath>

namespace oracle {

inline long double zeta_partial(double s, long N = 200000)
{
  long double sum = 0;
  for (long d = N - 1; d >= 1; --d)
    sum += std::pow(static_cast<long double>(d), -static_cast<long double>(s));
  long double n = N;
  long double tail = std::pow(n, 1.0L - s) / (s - 1.0L) + 0.5L * std::pow(n, -static_cast<long double>(s)) +
                     s / 12.0L * std::pow(n, -static_cast<long double>(s) - 1.0L);
  return sum + tail;
}

} // namespace oracle
