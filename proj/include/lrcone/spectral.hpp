#pragma once

// Infinite-chain convolution powers through the kernel symbol
//   w(theta) = sum_n J(n) cos(n theta),
//   J^{*k}(q) = (1/pi) int_0^pi w(theta)^k cos(q theta) dtheta,
// integrated by panelled tanh-sinh quadrature at extended precision.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "error.hpp"
#include "kernels.hpp"
#include "mp.hpp"
#include "parallel.hpp"

namespace lrcone {

// w(theta) on (0, pi] at the precision of the thread that built it.
class Symbol {
 public:
  Symbol(const KernelSpec &spec, int digits) : spec_(spec), digits_(digits)
  {
    mp::PrecisionScope scope(digits);
    if (spec.family() == KernelFamily::power_law)
      build_power_law();
    else
      build_direct();
  }

  int digits() const { return digits_; }

  mp::Float operator()(const mp::Float &theta) const
  {
    return spec_.family() == KernelFamily::power_law ? eval_power_law(theta) : eval_direct(theta);
  }

 private:
  // Re Li_p(e^{i theta}) = singular part + sum_j zeta(p - 2j) (-1)^j theta^{2j} / (2j)!
  void build_power_law()
  {
    mp::Float p(spec_.p());
    int terms = static_cast<int>(std::ceil(1.7 * digits_)) + 12;
    double pd = spec_.p();
    bool integer = spec_.integer_p();
    long m = static_cast<long>(pd);
    coef_.reserve(terms);
    mp::Float fact(1L);
    for (int j = 0; j < terms; ++j) {
      if (j > 0) {
        fact *= static_cast<long>(2 * j - 1);
        fact *= static_cast<long>(2 * j);
      }
      if (integer && m % 2 == 1 && 2 * j == m - 1) {
        coef_.emplace_back(0L);
        continue;
      }
      mp::Float z = mp::zeta(p - mp::Float(static_cast<long>(2 * j)));
      if (j % 2)
        z = -z;
      coef_.push_back(z / fact);
    }
    if (!integer) {
      // Gamma(1-p) theta^{p-1} cos(pi (p-1)/2)
      mp::Float pm1 = p - mp::Float(1L);
      sing_ = mp::gamma(mp::Float(1L) - p) * mp::cos(mp::pi() * pm1 / mp::Float(2L));
      sing_kind_ = 0;
    } else if (m % 2 == 1) {
      // (-1)^{(m-1)/2} theta^{m-1}/(m-1)! (H_{m-1} - ln theta)
      mp::Float f = mp::factorial(static_cast<unsigned long>(m - 1));
      sing_ = mp::Float(((m - 1) / 2) % 2 ? -1L : 1L) / f;
      harmonic_ = mp::Float(0L);
      for (long i = 1; i <= m - 1; ++i)
        harmonic_ += mp::Float(1L) / mp::Float(i);
      sing_kind_ = 1;
    } else {
      // -(-1)^{(m-2)/2} theta^{m-1}/(m-1)! pi/2
      mp::Float f = mp::factorial(static_cast<unsigned long>(m - 1));
      sing_ = mp::Float(((m - 2) / 2) % 2 ? 1L : -1L) * mp::pi() / (mp::Float(2L) * f);
      sing_kind_ = 2;
    }
    scale_ = mp::Float(2.0 * spec_.J0());
  }

  mp::Float eval_power_law(const mp::Float &theta) const
  {
    mp::Float x = theta * theta;
    mp::Float acc(0L);
    for (auto it = coef_.rbegin(); it != coef_.rend(); ++it) {
      acc *= x;
      acc += *it;
    }
    double pd = spec_.p();
    if (sing_kind_ == 0) {
      acc += sing_ * mp::pow(theta, mp::Float(pd - 1.0));
    } else {
      long m = static_cast<long>(pd);
      mp::Float tp = mp::pow(theta, m - 1);
      if (sing_kind_ == 1)
        acc += sing_ * tp * (harmonic_ - mp::log(theta));
      else
        acc += sing_ * tp;
    }
    return scale_ * acc;
  }

  void build_direct()
  {
    long nmax;
    if (spec_.finite_support()) {
      nmax = spec_.support_radius();
    } else {
      double extra = (digits_ + 8) * 2.302585092994046 / spec_.sigma();
      nmax = static_cast<long>(spec_.eta()) + static_cast<long>(std::ceil(extra)) + 1;
    }
    coef_.reserve(nmax + 1);
    coef_.emplace_back(0L);
    for (long n = 1; n <= nmax; ++n)
      coef_.push_back(mp::Float(2L) * spec_.eval_mp(n));
  }

  // Clenshaw on the cosine series
  mp::Float eval_direct(const mp::Float &theta) const
  {
    mp::Float c = mp::cos(theta);
    mp::Float two_c = c * mp::Float(2L);
    mp::Float b1(0L), b2(0L);
    for (std::size_t n = coef_.size() - 1; n >= 1; --n) {
      mp::Float b0 = two_c * b1 - b2 + coef_[n];
      b2 = std::move(b1);
      b1 = std::move(b0);
    }
    return c * b1 - b2 + coef_[0];
  }

  KernelSpec spec_;
  int digits_;
  std::vector<mp::Float> coef_;
  mp::Float sing_, harmonic_, scale_;
  int sing_kind_ = 0;
};

struct SpectralValues {
  std::vector<long> qs;
  int kmax = 0;
  // [q index][k] for k = 0..kmax
  std::vector<std::vector<mp::Float>> value;
  std::vector<std::vector<mp::Float>> error;
  int digits = 0;
  int panels = 0;
  int levels = 0;
  bool converged = false;
};

namespace detail {

struct TanhSinhNode {
  mp::Float delta;  // distance from the panel end, in units of the half width
  mp::Float weight; // includes the level-independent factor, not h
};

// nodes at t = j h for the given level: all j at level 0, odd j afterwards
inline std::vector<std::pair<double, TanhSinhNode>> tanh_sinh_level(int level, double h0, double tmax)
{
  std::vector<std::pair<double, TanhSinhNode>> out;
  double h = std::ldexp(h0, -level);
  long jmax = static_cast<long>(std::floor(tmax / h));
  mp::Float half_pi = mp::pi() / mp::Float(2L);
  for (long j = 0; j <= jmax; ++j) {
    if (level > 0 && j % 2 == 0)
      continue;
    mp::Float t = mp::Float(static_cast<double>(j)) * mp::Float(h);
    mp::Float u = half_pi * mp::sinh(t);
    mp::Float cu = mp::cosh(u);
    TanhSinhNode node{mp::Float(2L) / (mp::Float(1L) + mp::exp(u * mp::Float(2L))),
                      half_pi * mp::cosh(t) / (cu * cu)};
    out.emplace_back(static_cast<double>(j) * h, std::move(node));
  }
  return out;
}

// t beyond which weights fall below 10^-(digits+12)
inline double tanh_sinh_tmax(int digits)
{
  double target = -(digits + 12) * 2.302585092994046;
  for (double t = 0.5;; t += 0.05) {
    double u = 1.5707963267948966 * std::sinh(t);
    double logw = std::log(1.5707963267948966) + t - 2 * (u - std::log(2.0));
    if (logw < target)
      return t;
  }
}

} // namespace detail

// Values J^{*k}(q), k = 0..kmax, for every q in qs. Errors are the change
// between the last two refinement levels plus a rounding allowance; both
// are absolute.
inline SpectralValues spectral_convolutions(const KernelSpec &spec, const std::vector<long> &qs, int kmax, int digits,
                                            int workers = 1, int max_level = 11)
{
  if (spec.family() != KernelFamily::power_law && spec.family() != KernelFamily::soft_truncated &&
      !spec.finite_support())
    numeric_error("spectral route needs a translation-invariant kernel");
  int work_digits = digits + 12;
  mp::PrecisionScope scope(work_digits);
  SpectralValues out;
  out.qs = qs;
  out.kmax = kmax;
  out.digits = digits;
  long qmax = 0;
  for (long q : qs)
    qmax = std::max(qmax, std::labs(q));
  int panels = std::max<int>(4, static_cast<int>((qmax + 3) / 4));
  // the integrand oscillates faster with large powers near theta = 0
  panels = std::max(panels, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(kmax)))));
  out.panels = panels;

  const Symbol symbol(spec, work_digits);
  const std::size_t nq = qs.size(), nk = static_cast<std::size_t>(kmax) + 1;
  const mp::Float pi = mp::pi();
  const mp::Float width = pi / mp::Float(static_cast<long>(panels));
  const mp::Float half = width / mp::Float(2L);

  double Sabs = kernel_sum(spec).upper();
  std::vector<mp::Float> scale(nk);
  scale[0] = mp::Float(1L);
  for (std::size_t k = 1; k < nk; ++k)
    scale[k] = scale[k - 1] * mp::Float(std::max(Sabs, 1e-300));
  mp::Float tol = mp::pow(mp::Float(10L), static_cast<long>(-digits));

  // per-panel partial sums keep the reduction order independent of workers
  using Grid = std::vector<std::vector<mp::Float>>;
  std::vector<Grid> acc(panels, Grid(nq, std::vector<mp::Float>(nk, mp::Float(0L))));
  Grid prev(nq, std::vector<mp::Float>(nk)), cur = prev;

  const double h0 = 0.5;
  const double tmax = detail::tanh_sinh_tmax(work_digits);
  const int bits_digits = work_digits;

  for (int level = 0; level <= max_level; ++level) {
    auto nodes = detail::tanh_sinh_level(level, h0, tmax);
    parallel_for(static_cast<std::size_t>(panels), workers, [&](std::size_t pidx) {
      mp::PrecisionScope inner(bits_digits);
      mp::Float a = width * mp::Float(static_cast<long>(pidx));
      mp::Float b = a + width;
      Grid &g = acc[pidx];
      auto add_point = [&](const mp::Float &theta, const mp::Float &w) {
        mp::Float om = symbol(theta);
        for (std::size_t iq = 0; iq < nq; ++iq) {
          mp::Float c = w * mp::cos(mp::Float(qs[iq]) * theta);
          auto &row = g[iq];
          row[0] += c;
          for (std::size_t k = 1; k < nk; ++k) {
            c *= om;
            row[k] += c;
          }
        }
      };
      for (const auto &[t, node] : nodes) {
        mp::Float d = half * node.delta;
        mp::Float w = half * node.weight;
        if (t == 0.0) {
          add_point(a + half, w);
        } else {
          add_point(b - d, w);
          add_point(a + d, w);
        }
      }
    });
    double h = std::ldexp(h0, -level);
    mp::Float factor = mp::Float(h) / pi;
    for (std::size_t iq = 0; iq < nq; ++iq)
      for (std::size_t k = 0; k < nk; ++k) {
        mp::Float s(0L);
        for (int pidx = 0; pidx < panels; ++pidx)
          s += acc[pidx][iq][k];
        cur[iq][k] = s * factor;
      }
    out.levels = level;
    if (level >= 3) {
      bool ok = true;
      for (std::size_t iq = 0; iq < nq && ok; ++iq)
        for (std::size_t k = 0; k < nk; ++k)
          if (mp::abs(cur[iq][k] - prev[iq][k]) > tol * scale[k]) {
            ok = false;
            break;
          }
      if (ok) {
        out.converged = true;
        break;
      }
    }
    if (level < max_level)
      std::swap(prev, cur);
  }
  // cur holds the finest level, prev the one before
  mp::Float rounding = mp::pow(mp::Float(10L), static_cast<long>(-work_digits + 2));
  out.value.assign(nq, std::vector<mp::Float>(nk));
  out.error.assign(nq, std::vector<mp::Float>(nk));
  for (std::size_t iq = 0; iq < nq; ++iq)
    for (std::size_t k = 0; k < nk; ++k) {
      out.value[iq][k] = cur[iq][k];
      out.error[iq][k] = mp::abs(cur[iq][k] - prev[iq][k]) + rounding * scale[k];
    }
  return out;
}

} // namespace lrcone
