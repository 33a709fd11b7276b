#pragma once

#include <cmath>
#include <limits>

#include "mp.hpp"

namespace lrcone {

// sign + log10|x|; zero is sign 0 with log10_abs = -inf
struct SignedLog {
  int sign = 0;
  double log10_abs = -std::numeric_limits<double>::infinity();

  static SignedLog from(long double x)
  {
    if (x == 0)
      return {};
    return {x > 0 ? 1 : -1, static_cast<double>(std::log10(std::fabs(x)))};
  }
  static SignedLog from(const mp::Float &x)
  {
    if (x.is_zero())
      return {};
    return {x.sign(), x.log10_abs()};
  }

  // linear value; under/overflows to 0 or inf outside long double range
  long double value() const
  {
    if (sign == 0)
      return 0.0L;
    return sign * std::pow(10.0L, static_cast<long double>(log10_abs));
  }
};

} // namespace lrcone
