#pragma once

// Taylor coefficients alpha_r = sum_{a=0}^{2r} (-1)^a c_a c_{2r-a},
// c_k = J^{*k}(q)/k!, and the measure Q_q(t) built from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "convolution.hpp"
#include "error.hpp"
#include "kernels.hpp"
#include "mp.hpp"
#include "parallel.hpp"
#include "signed_log.hpp"

namespace lrcone {

enum class IntervalFlag { exact, certified, suppressed };

inline const char *flag_name(IntervalFlag f)
{
  switch (f) {
  case IntervalFlag::exact: return "exact";
  case IntervalFlag::certified: return "certified";
  case IntervalFlag::suppressed: return "suppressed-below-precision";
  }
  return "?";
}

struct PrecisionPolicy {
  int initial_digits = 32;
  int max_digits = 512;
  double stability = 1e-6;
  ConvMethod method = ConvMethod::automatic;
  std::optional<long> window;
  int workers = 1;
};

struct AlphaCoefficient {
  int r = 0;
  mp::Float value;
  mp::Float error; // absolute; the true value lies in [value - error, value + error]
  std::optional<mp::Rational> exact;
  double cancel_loss = 0; // log10(max |term| / |alpha|)
  IntervalFlag flag = IntervalFlag::certified;

  SignedLog slog() const { return SignedLog::from(value); }
  bool contains_zero() const { return mp::abs(value) <= error; }
};

struct AlphaSeries {
  long q = 0;
  int Rmax = 0;
  std::vector<AlphaCoefficient> alpha;
  int precision_digits = 0;
  ConvMethod method = ConvMethod::automatic;
  std::string form_note = "literal signs";
};

namespace detail {

inline double cancel_digits(const mp::Float &max_term, const mp::Float &v)
{
  if (max_term.is_zero())
    return 0.0;
  if (v.is_zero())
    return std::numeric_limits<double>::infinity();
  return std::max(0.0, max_term.log10_abs() - v.log10_abs());
}

inline std::vector<AlphaCoefficient> alpha_from_column(const ConvColumn &col, int Rmax)
{
  std::vector<AlphaCoefficient> out(static_cast<std::size_t>(Rmax) + 1);
  const int kmax = 2 * Rmax;
  if (!col.exact.empty()) {
    std::vector<mp::Rational> c(kmax + 1);
    mp::Integer fact = 1;
    for (int k = 0; k <= kmax; ++k) {
      if (k > 0)
        fact *= k;
      c[k] = col.exact[k] / mp::Rational(fact);
    }
    for (int r = 0; r <= Rmax; ++r) {
      mp::Rational s = 0, maxt = 0;
      for (int a = 0; a <= 2 * r; ++a) {
        mp::Rational term = c[a] * c[2 * r - a];
        if (a % 2)
          term = -term;
        mp::Rational at = abs(term);
        if (at > maxt)
          maxt = at;
        s += term;
      }
      auto &o = out[r];
      o.r = r;
      o.exact = s;
      o.value = mp::Float(s);
      o.error = mp::Float(0L);
      o.flag = IntervalFlag::exact;
      o.cancel_loss = cancel_digits(mp::Float(maxt), mp::Float(s));
    }
    return out;
  }
  std::vector<mp::Float> c(kmax + 1), e(kmax + 1);
  mp::Float fact(1L);
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0)
      fact *= static_cast<long>(k);
    c[k] = col.value[k] / fact;
    e[k] = col.error[k] / fact;
  }
  for (int r = 0; r <= Rmax; ++r) {
    mp::Float s(0L), err(0L), maxt(0L);
    for (int a = 0; a <= 2 * r; ++a) {
      int b = 2 * r - a;
      mp::Float term = c[a] * c[b];
      if (a % 2)
        term = -term;
      mp::Float at = mp::abs(term);
      if (at > maxt)
        maxt = at;
      s += term;
      err += mp::abs(c[a]) * e[b] + e[a] * mp::abs(c[b]) + e[a] * e[b];
    }
    // products and running sum rounding
    err += maxt * mp::Float(static_cast<long>(4 * r + 4)) * mp::ulp_factor(s);
    auto &o = out[r];
    o.r = r;
    o.value = s;
    o.error = err;
    if (err.is_zero() && s.is_zero())
      o.flag = IntervalFlag::exact;
    else
      o.flag = mp::abs(s) > err ? IntervalFlag::certified : IntervalFlag::suppressed;
    o.cancel_loss = cancel_digits(maxt, o.flag == IntervalFlag::suppressed ? err : s);
  }
  return out;
}

inline std::vector<std::vector<AlphaCoefficient>> alpha_at_digits(const KernelSpec &spec, const std::vector<long> &qs,
                                                                  int Rmax, int digits, const PrecisionPolicy &policy,
                                                                  ConvMethod &method)
{
  ConvValues cv = conv_values(spec, qs, 2 * Rmax, digits, policy.method, policy.window, policy.workers);
  method = cv.method;
  mp::PrecisionScope scope(digits + 10);
  std::vector<std::vector<AlphaCoefficient>> out(qs.size());
  parallel_for(qs.size(), policy.workers, [&](std::size_t i) {
    mp::PrecisionScope inner(digits + 10);
    out[i] = alpha_from_column(cv.columns[i], Rmax);
  });
  return out;
}

inline bool stable(const AlphaCoefficient &hi, const AlphaCoefficient &lo, double rel)
{
  if (hi.flag == IntervalFlag::exact && lo.flag == IntervalFlag::exact)
    return hi.value == lo.value;
  if (hi.flag != IntervalFlag::certified || lo.flag != IntervalFlag::certified)
    return false;
  return mp::abs(hi.value - lo.value) <= mp::Float(rel) * mp::abs(hi.value);
}

} // namespace detail

// Batch over distances; each distance gets its own precision history.
inline std::vector<AlphaSeries> alpha_series_batch(const KernelSpec &spec, const std::vector<long> &qs, int Rmax,
                                                   const PrecisionPolicy &policy = {})
{
  if (Rmax < 0)
    config_error("Rmax must be >= 0");
  for (long q : qs)
    if (q < 0)
      config_error("distance q must be >= 0");
  if (policy.initial_digits < 16 || policy.max_digits < policy.initial_digits)
    config_error("precision policy needs 16 <= initial_digits <= max_digits");
  std::vector<AlphaSeries> out(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    out[i].q = qs[i];
    out[i].Rmax = Rmax;
  }
  ConvMethod method = resolve_method(spec, policy.method, policy.window);
  int d = policy.initial_digits;
  if (method == ConvMethod::exact_dp) {
    auto a = detail::alpha_at_digits(spec, qs, Rmax, d, policy, method);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      out[i].alpha = std::move(a[i]);
      out[i].precision_digits = d;
      out[i].method = method;
    }
    return out;
  }
  // Doubling: a distance is done once every coefficient is certified and
  // stable against the previous level; at the ceiling, unresolved ones
  // stay as intervals around zero.
  std::vector<long> pending = qs;
  std::vector<std::size_t> index(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i)
    index[i] = i;
  auto prev = detail::alpha_at_digits(spec, pending, Rmax, d, policy, method);
  for (;;) {
    int d2 = std::min(2 * d, policy.max_digits);
    if (d2 == d) {
      for (std::size_t j = 0; j < pending.size(); ++j) {
        out[index[j]].alpha = std::move(prev[j]);
        out[index[j]].precision_digits = d;
        out[index[j]].method = method;
      }
      break;
    }
    auto cur = detail::alpha_at_digits(spec, pending, Rmax, d2, policy, method);
    std::vector<long> still;
    std::vector<std::size_t> still_index;
    std::vector<std::vector<AlphaCoefficient>> still_cur;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      bool done = true;
      for (int r = 0; r <= Rmax && done; ++r) {
        const auto &h = cur[j][r];
        done = detail::stable(h, prev[j][r], policy.stability);
      }
      if (done || d2 >= policy.max_digits) {
        out[index[j]].alpha = std::move(cur[j]);
        out[index[j]].precision_digits = d2;
        out[index[j]].method = method;
      } else {
        still.push_back(pending[j]);
        still_index.push_back(index[j]);
        still_cur.push_back(std::move(cur[j]));
      }
    }
    if (still.empty())
      break;
    pending = std::move(still);
    index = std::move(still_index);
    prev = std::move(still_cur);
    d = d2;
  }
  return out;
}

inline AlphaSeries alpha_series(const KernelSpec &spec, long q, int Rmax, const PrecisionPolicy &policy = {})
{
  return std::move(alpha_series_batch(spec, {q}, Rmax, policy).front());
}

// sum_{r > R} x^{2r}/(2r)! with x = 2 S |t|: majorant of the dropped terms
inline double truncation_bound(double S, int R, double t)
{
  double x = 2.0 * S * std::fabs(t);
  if (x == 0.0)
    return 0.0;
  double lx = std::log(x);
  double total = 0;
  for (long r = R + 1;; ++r) {
    double lterm = 2.0 * r * lx - std::lgamma(2.0 * r + 1.0);
    double term = std::exp(lterm);
    double ratio = x * x / ((2.0 * r + 1.0) * (2.0 * r + 2.0));
    if (ratio < 1.0) {
      // later ratios are smaller still: geometric majorant
      total += term / (1.0 - ratio);
      return total;
    }
    total += term;
  }
}

inline double truncation_bound(const KernelSpec &spec, int R, double t)
{
  return truncation_bound(kernel_sum(spec).upper(), R, t);
}

// smallest R with truncation_bound < tol at t_max, capped at 4 S t_max + 64
inline int default_rmax(double S, double t_max, double tol = 1e-8)
{
  int cap = static_cast<int>(std::ceil(4.0 * S * std::fabs(t_max))) + 64;
  for (int R = 0; R <= cap; ++R)
    if (truncation_bound(S, R, t_max) < tol)
      return R;
  return -1;
}

enum class QForm { unitary, literal };

inline const char *form_name(QForm f) { return f == QForm::unitary ? "unitary" : "literal"; }

inline QForm parse_form(const std::string &s)
{
  if (s == "unitary")
    return QForm::unitary;
  if (s == "literal")
    return QForm::literal;
  config_error("unknown form '" + s + "' (unitary|literal)");
}

struct QSample {
  double t = 0;
  mp::Float Q;
  double error_bound = 0;
  double dQdt = 0;
};

struct QCurve {
  long q = 0;
  QForm form = QForm::unitary;
  int Rmax = 0;
  double S_upper = 0;
  AlphaSeries alpha;
  std::vector<QSample> samples;
};

// Sum with per-sample bound: coefficient errors + truncation + rounding.
inline QSample evaluate_q(const AlphaSeries &a, QForm form, double t, double S_upper)
{
  QSample s;
  s.t = t;
  int digits = a.precision_digits + 10;
  mp::PrecisionScope scope(digits);
  mp::Float tt = mp::Float(t) * mp::Float(t);
  mp::Float pw(1L), sum(0L), err(0L), deriv(0L), maxt(0L);
  for (const auto &c : a.alpha) {
    if (c.r > 0)
      pw *= tt;
    mp::Float term = c.value * pw;
    if (form == QForm::unitary && c.r % 2)
      term = -term;
    sum += term;
    err += c.error * pw;
    mp::Float at = mp::abs(term);
    if (at > maxt)
      maxt = at;
    if (c.r > 0 && t != 0.0)
      deriv += term * mp::Float(static_cast<long>(2 * c.r)) / mp::Float(t);
  }
  err += maxt * mp::Float(static_cast<long>(a.alpha.size() * 2 + 2)) * mp::pow2(-mp::digits_to_bits(digits) + 1);
  s.Q = sum;
  s.error_bound = (err + mp::Float(truncation_bound(S_upper, a.Rmax, t))).to_double();
  s.dQdt = deriv.to_double();
  return s;
}

// Working digits so that the largest partial term of the t-series, about
// exp(2 S t), still leaves ~20 significant digits for Q.
inline int series_digits(double S_upper, double t_max)
{
  return static_cast<int>(std::ceil(2.0 * S_upper * std::fabs(t_max) / 2.302585092994046)) + 24;
}

inline QCurve q_curve(const KernelSpec &spec, long q, const std::vector<double> &times, QForm form = QForm::unitary,
                      std::optional<int> Rmax = std::nullopt, PrecisionPolicy policy = {})
{
  QCurve out;
  out.q = q;
  out.form = form;
  out.S_upper = kernel_sum(spec).upper();
  double t_max = 0;
  for (double t : times)
    t_max = std::max(t_max, std::fabs(t));
  if (Rmax) {
    if (*Rmax < 0)
      config_error("Rmax must be >= 0");
    out.Rmax = *Rmax;
  } else {
    int R = default_rmax(out.S_upper, t_max);
    if (R < 0) {
      int cap = static_cast<int>(std::ceil(4.0 * out.S_upper * t_max)) + 64;
      double first = t_max;
      std::vector<double> sorted(times);
      std::sort(sorted.begin(), sorted.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); });
      for (double t : sorted)
        if (truncation_bound(out.S_upper, cap, t) >= 1e-8) {
          first = t;
          break;
        }
      numeric_error("Rmax cap " + std::to_string(cap) + " cannot reach 1e-8 truncation; first failing t = " +
                    csv::format(first));
    }
    out.Rmax = R;
  }
  policy.initial_digits = std::max(policy.initial_digits, series_digits(out.S_upper, t_max));
  policy.max_digits = std::max(policy.max_digits, 2 * policy.initial_digits);
  out.alpha = alpha_series(spec, q, out.Rmax, policy);
  out.samples.reserve(times.size());
  for (double t : times)
    out.samples.push_back(evaluate_q(out.alpha, form, t, out.S_upper));
  return out;
}

} // namespace lrcone
