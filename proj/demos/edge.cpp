// Edge time of a p = 2.5 power-law chain against nearest neighbour, plus the
// first few series coefficients at a short distance.

#include <iostream>

#include "lrcone/lightcone.hpp"

int main()
{
  using namespace lrcone;
  const long q = 200;
  for (const auto &spec : {KernelSpec::power_law(2.5), KernelSpec::soft_truncated(2.5, 5, 0.5),
                           KernelSpec::nearest_neighbor()}) {
    EETRecord r = eet(spec, q, 1e-5);
    std::cout << spec.describe() << ": edge at t = " << r.time << " (N = " << r.N << ")\n";
  }

  AlphaSeries a = alpha_series(KernelSpec::power_law(3), 20, 3);
  for (const auto &c : a.alpha)
    std::cout << "alpha_" << c.r << "(20) = " << c.value.str(12) << " +- " << c.error.to_double() << " ["
              << flag_name(c.flag) << "]\n";
}
