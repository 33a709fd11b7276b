#pragma once

#include <functional>

namespace oracle {

inline double central_diff(const std::function<double(double)> &f, double x, double h)
{
  return (f(x + h) - f(x - h)) / (2 * h);
}

inline double second_diff(const std::function<double(double)> &f, double x, double h)
{
  return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
}

} // namespace oracle
