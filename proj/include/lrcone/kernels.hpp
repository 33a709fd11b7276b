#pragma once

// Interaction kernels J(n): families, evaluation, certified sums and the
// Type 1 / Type 2 classification by the sign of J'' - J'J.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "error.hpp"
#include "mp.hpp"

namespace lrcone {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class KernelFamily { power_law, sharp_truncated, soft_truncated, nearest_neighbor, tabulated };

inline const char *family_name(KernelFamily f)
{
  switch (f) {
  case KernelFamily::power_law: return "power_law";
  case KernelFamily::sharp_truncated: return "sharp_truncated";
  case KernelFamily::soft_truncated: return "soft_truncated";
  case KernelFamily::nearest_neighbor: return "nearest_neighbor";
  case KernelFamily::tabulated: return "tabulated";
  }
  return "?";
}

inline KernelFamily parse_family(const std::string &s)
{
  if (s == "power_law") return KernelFamily::power_law;
  if (s == "sharp_truncated") return KernelFamily::sharp_truncated;
  if (s == "soft_truncated") return KernelFamily::soft_truncated;
  if (s == "nearest_neighbor") return KernelFamily::nearest_neighbor;
  if (s == "tabulated") return KernelFamily::tabulated;
  config_error("unknown kernel family '" + s + "'");
}

// Exact rational from a decimal literal ("0.125", "-3e-4", "2.5E+1") or a
// fraction "a/b".
inline mp::Rational parse_rational(std::string text)
{
  text.erase(std::remove_if(text.begin(), text.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; }),
             text.end());
  if (text.empty())
    config_error("empty number");
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      mp::Rational r(mp::Integer(text.substr(0, slash), 10), mp::Integer(text.substr(slash + 1), 10));
      if (r.get_den() == 0)
        config_error("zero denominator in '" + text + "'");
      r.canonicalize();
      return r;
    }
    long exp10 = 0;
    auto epos = text.find_first_of("eE");
    std::string mant = text.substr(0, epos);
    if (epos != std::string::npos)
      exp10 = std::stol(text.substr(epos + 1));
    bool neg = false;
    if (!mant.empty() && (mant[0] == '+' || mant[0] == '-')) {
      neg = mant[0] == '-';
      mant.erase(0, 1);
    }
    auto dot = mant.find('.');
    std::string digits = mant;
    if (dot != std::string::npos) {
      digits = mant.substr(0, dot) + mant.substr(dot + 1);
      exp10 -= static_cast<long>(mant.size() - dot - 1);
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      config_error("not a decimal number: '" + text + "'");
    mp::Integer num(digits, 10), scale; // base 0 would read a leading 0 as octal
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    mp::Rational r = exp10 >= 0 ? mp::Rational(num * scale) : mp::Rational(num, scale);
    r.canonicalize();
    return neg ? mp::Rational(-r) : r;
  } catch (const std::invalid_argument &) {
    config_error("not a number: '" + text + "'");
  }
}

enum class KernelType { Type1, Type2, Indeterminate };

inline const char *type_name(KernelType t)
{
  switch (t) {
  case KernelType::Type1: return "Type1";
  case KernelType::Type2: return "Type2";
  case KernelType::Indeterminate: return "Indeterminate";
  }
  return "?";
}

class KernelSpec {
 public:
  static KernelSpec power_law(double p, double J0 = 1.0)
  {
    KernelSpec k(KernelFamily::power_law, p, J0);
    if (!(p > 1) || !std::isfinite(p))
      config_error("power_law needs finite p > 1 for absolute convergence");
    return k;
  }

  static KernelSpec sharp_truncated(double p, long eta, double J0 = 1.0)
  {
    KernelSpec k(KernelFamily::sharp_truncated, p, J0);
    if (!std::isfinite(p))
      config_error("sharp_truncated needs finite p");
    if (eta < 1)
      config_error("eta must be a positive integer");
    k.eta_ = eta;
    return k;
  }

  static KernelSpec soft_truncated(double p, long eta, double sigma, double J0 = 1.0)
  {
    KernelSpec k(KernelFamily::soft_truncated, p, J0);
    if (!std::isfinite(p) || p < 0)
      config_error("soft_truncated needs finite p >= 0");
    if (eta < 1)
      config_error("eta must be a positive integer");
    if (!(sigma > 0) || !std::isfinite(sigma))
      config_error("soft_truncated needs finite sigma > 0");
    k.eta_ = eta;
    k.sigma_ = sigma;
    return k;
  }

  static KernelSpec nearest_neighbor(double J0 = 1.0)
  {
    KernelSpec k(KernelFamily::nearest_neighbor, inf, J0);
    k.eta_ = 1;
    return k;
  }

  // Entries as (n, decimal text). Only n >= 1 may be given alone; a -n entry,
  // if present, must carry the same value. Unlisted offsets are 0.
  static KernelSpec tabulated(const std::vector<std::pair<long, std::string>> &entries, double J0 = 1.0)
  {
    KernelSpec k(KernelFamily::tabulated, std::nan(""), J0);
    std::map<long, mp::Rational> vals;
    for (const auto &[n, text] : entries) {
      mp::Rational v = parse_rational(text);
      if (n == 0) {
        if (v != 0)
          config_error("tabulated kernel must have J(0) = 0");
        continue;
      }
      long m = std::labs(n);
      auto it = vals.find(m);
      if (it != vals.end() && it->second != v)
        config_error("tabulated kernel is not symmetric at n = " + std::to_string(m));
      vals[m] = v;
    }
    long nmax = 0;
    for (const auto &[m, v] : vals)
      if (v != 0)
        nmax = std::max(nmax, m);
    k.table_.assign(static_cast<std::size_t>(nmax) + 1, 0);
    k.table_exact_.assign(static_cast<std::size_t>(nmax) + 1, mp::Rational(0));
    for (const auto &[m, v] : vals) {
      if (m > nmax)
        continue;
      k.table_exact_[m] = v * mp::rational_from_double(J0);
      k.table_[m] = k.table_exact_[m].get_d();
    }
    k.eta_ = nmax;
    return k;
  }

  static KernelSpec load_table(const std::string &path, double J0 = 1.0)
  {
    auto t = csv::read(path);
    int cn = t.column("n"), cv = t.column("value");
    if (cn < 0 || cv < 0)
      config_error("table " + path + " needs columns n,value");
    std::vector<std::pair<long, std::string>> entries;
    for (const auto &row : t.rows) {
      if (row.size() <= static_cast<std::size_t>(std::max(cn, cv)))
        config_error("short row in " + path);
      entries.emplace_back(std::stol(row[cn]), row[cv]);
    }
    return tabulated(entries, J0);
  }

  // eta = inf selects the full power law; sigma = inf a sharp cutoff
  static KernelSpec from_parameters(double p, double eta, double sigma, double J0 = 1.0)
  {
    if (std::isinf(p))
      return nearest_neighbor(J0);
    if (std::isinf(eta))
      return power_law(p, J0);
    if (eta < 1 || eta != std::floor(eta))
      config_error("eta must be a positive integer or inf");
    if (std::isinf(sigma))
      return sharp_truncated(p, static_cast<long>(eta), J0);
    return soft_truncated(p, static_cast<long>(eta), sigma, J0);
  }

  KernelFamily family() const { return family_; }
  double p() const { return p_; }
  double J0() const { return J0_; }
  double eta() const { return eta_ ? static_cast<double>(*eta_) : inf; }
  double sigma() const { return sigma_; }

  bool finite_support() const { return family_ != KernelFamily::power_law && family_ != KernelFamily::soft_truncated; }

  // largest |n| with J(n) != 0; -1 when the support is infinite
  long support_radius() const
  {
    if (!finite_support())
      return -1;
    return *eta_;
  }

  double operator()(long n) const
  {
    long m = std::labs(n);
    if (m == 0)
      return 0.0;
    switch (family_) {
    case KernelFamily::power_law:
      return J0_ * std::pow(static_cast<double>(m), -p_);
    case KernelFamily::sharp_truncated:
      return m > *eta_ ? 0.0 : J0_ * std::pow(static_cast<double>(m), -p_);
    case KernelFamily::soft_truncated: {
      double v = J0_ * std::pow(static_cast<double>(m), -p_);
      return m > *eta_ ? v * std::exp(-sigma_ * static_cast<double>(m - *eta_)) : v;
    }
    case KernelFamily::nearest_neighbor:
      return m == 1 ? J0_ : 0.0;
    case KernelFamily::tabulated:
      return m < static_cast<long>(table_.size()) ? table_[m] : 0.0;
    }
    return 0.0;
  }

  long double eval_ld(long n) const
  {
    long m = std::labs(n);
    if (m == 0)
      return 0.0L;
    long double J0 = J0_;
    switch (family_) {
    case KernelFamily::power_law:
      return J0 * std::pow(static_cast<long double>(m), static_cast<long double>(-p_));
    case KernelFamily::sharp_truncated:
      return m > *eta_ ? 0.0L : J0 * std::pow(static_cast<long double>(m), static_cast<long double>(-p_));
    case KernelFamily::soft_truncated: {
      long double v = J0 * std::pow(static_cast<long double>(m), static_cast<long double>(-p_));
      return m > *eta_ ? v * std::exp(-static_cast<long double>(sigma_) * static_cast<long double>(m - *eta_)) : v;
    }
    case KernelFamily::nearest_neighbor:
      return m == 1 ? J0 : 0.0L;
    case KernelFamily::tabulated:
      return m < static_cast<long>(table_.size()) ? table_exact_[m].get_d() : 0.0L;
    }
    return 0.0L;
  }

  // J(n) at the thread's working precision
  mp::Float eval_mp(long n) const
  {
    long m = std::labs(n);
    if (m == 0)
      return mp::Float(0L);
    if (auto e = eval_exact(m))
      return mp::Float(*e);
    mp::Float v = mp::Float(J0_) * mp::pow(mp::Float(m), -mp::Float(p_));
    if (family_ == KernelFamily::soft_truncated && m > *eta_)
      v *= mp::exp(mp::Float(-sigma_) * mp::Float(m - *eta_));
    return v;
  }

  bool integer_p() const { return std::isfinite(p_) && p_ == std::floor(p_) && std::fabs(p_) < 64; }

  // exact value when J(n) is rational (the double parameters are taken as
  // their exact binary values)
  std::optional<mp::Rational> eval_exact(long n) const
  {
    long m = std::labs(n);
    if (m == 0)
      return mp::Rational(0);
    mp::Rational J0 = mp::rational_from_double(J0_);
    switch (family_) {
    case KernelFamily::nearest_neighbor:
      return m == 1 ? J0 : mp::Rational(0);
    case KernelFamily::tabulated:
      return m < static_cast<long>(table_exact_.size()) ? table_exact_[m] : mp::Rational(0);
    case KernelFamily::sharp_truncated:
      if (m > *eta_)
        return mp::Rational(0);
      [[fallthrough]];
    case KernelFamily::power_law:
    case KernelFamily::soft_truncated:
      if (family_ == KernelFamily::soft_truncated && m > *eta_)
        return std::nullopt;
      if (!integer_p())
        return std::nullopt;
      {
        mp::Integer pw;
        long e = static_cast<long>(p_);
        mpz_ui_pow_ui(pw.get_mpz_t(), static_cast<unsigned long>(m), static_cast<unsigned long>(std::labs(e)));
        return e >= 0 ? mp::Rational(J0 / mp::Rational(pw)) : mp::Rational(J0 * mp::Rational(pw));
      }
    }
    return std::nullopt;
  }

  // every nonzero value is rational and the support is finite
  bool exact_rational() const
  {
    switch (family_) {
    case KernelFamily::nearest_neighbor:
    case KernelFamily::tabulated: return true;
    case KernelFamily::sharp_truncated: return integer_p();
    default: return false;
    }
  }

  // certified bound on sum_{|n| > W} |J(n)|
  double tail_bound(long W) const
  {
    W = std::max(W, 0L);
    double a = std::fabs(J0_);
    switch (family_) {
    case KernelFamily::power_law:
      if (W == 0)
        return inf;
      return 2.0 * a * std::pow(static_cast<double>(W), 1.0 - p_) / (p_ - 1.0);
    case KernelFamily::soft_truncated: {
      double s = 0;
      long from = W;
      for (long n = *eta_; n > W; --n)
        s += std::fabs((*this)(n));
      from = std::max(W, *eta_);
      double geo = std::exp(-sigma_ * static_cast<double>(from + 1 - *eta_)) / (-std::expm1(-sigma_));
      double lead = from == 0 ? 1.0 : std::pow(static_cast<double>(from), -p_);
      return 2.0 * (s + a * lead * geo);
    }
    default: {
      double s = 0;
      for (long n = support_radius(); n > W; --n)
        s += std::fabs((*this)(n));
      return 2.0 * s;
    }
    }
  }

  std::string eta_text() const { return eta_ && family_ != KernelFamily::power_law ? std::to_string(*eta_) : "inf"; }
  std::string sigma_text() const { return csv::format(sigma_); }

  std::string describe() const
  {
    std::string s = family_name(family_);
    if (family_ != KernelFamily::nearest_neighbor && family_ != KernelFamily::tabulated)
      s += " p=" + csv::format(p_);
    if (family_ == KernelFamily::sharp_truncated || family_ == KernelFamily::soft_truncated)
      s += " eta=" + eta_text();
    if (family_ == KernelFamily::soft_truncated)
      s += " sigma=" + sigma_text();
    if (family_ == KernelFamily::tabulated)
      s += " nmax=" + std::to_string(*eta_);
    if (J0_ != 1.0)
      s += " J0=" + csv::format(J0_);
    return s;
  }

 private:
  KernelSpec(KernelFamily f, double p, double J0) : family_(f), p_(p), J0_(J0)
  {
    if (!std::isfinite(J0) || J0 == 0)
      config_error("J0 must be finite and nonzero");
  }

  KernelFamily family_;
  double p_;
  double J0_;
  std::optional<long> eta_;
  double sigma_ = inf;
  std::vector<double> table_;
  std::vector<mp::Rational> table_exact_;
};

inline double eval_kernel(const KernelSpec &spec, long n) { return spec(n); }

struct KernelSum {
  double S = 0;          // sum_n J(n) over |n| <= window
  double abs_sum = 0;    // sum_n |J(n)| over the same window
  double tail_bound = 0; // covers the dropped tail and summation rounding
  long window = 0;

  // certified upper bound on sum_n |J(n)|
  double upper() const { return abs_sum + tail_bound; }
};

inline long default_sum_window(const KernelSpec &spec)
{
  switch (spec.family()) {
  case KernelFamily::power_law: return 1L << 20;
  case KernelFamily::soft_truncated:
    return std::min(1L << 20, static_cast<long>(spec.eta()) + static_cast<long>(std::ceil(80.0 / spec.sigma())) + 1);
  default: return spec.support_radius();
  }
}

inline KernelSum kernel_sum(const KernelSpec &spec, long W = 0)
{
  if (W <= 0)
    W = default_sum_window(spec);
  if (spec.finite_support())
    W = std::min(W, spec.support_radius());
  // Neumaier compensated sums: error <= (2u + n u^2) sum|J|, and n u^2 is
  // taken at n = 2^40 so the allowance does not grow with W
  long double s = 0, cs = 0, a = 0, ca = 0;
  auto acc = [](long double &sum, long double &c, long double v) {
    long double t = sum + v;
    c += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  for (long n = W; n >= 1; --n) {
    long double v = spec.eval_ld(n);
    acc(s, cs, v);
    acc(a, ca, std::fabs(v));
  }
  s += cs;
  a += ca;
  KernelSum out;
  out.window = W;
  out.S = static_cast<double>(2 * s);
  out.abs_sum = static_cast<double>(2 * a);
  const double u = LDBL_EPSILON / 2;
  double rounding = spec.finite_support() && spec.exact_rational() && W <= 64
                        ? 0.0
                        : (2.0 * u + 0x1p40 * u * u) * out.abs_sum + DBL_EPSILON * out.abs_sum;
  out.tail_bound = spec.tail_bound(W) + rounding;
  return out;
}

// D(x) = J''(x) - J'(x) J(x) on the continuous extension; nullopt where the
// family has none
inline std::optional<double> classification_quantity(const KernelSpec &spec, double x)
{
  double p = spec.p(), J0 = spec.J0();
  auto powerlaw = [&](double n) {
    double J = J0 * std::pow(n, -p);
    return p * (p + 1) * J / (n * n) + p * J * J / n;
  };
  switch (spec.family()) {
  case KernelFamily::power_law:
    return powerlaw(x);
  case KernelFamily::soft_truncated: {
    double eta = spec.eta();
    if (x <= eta)
      return powerlaw(x);
    double J = J0 * std::pow(x, -p) * std::exp(-spec.sigma() * (x - eta));
    double g = p / x + spec.sigma();
    return J * (g * g + p / (x * x)) + J * J * g;
  }
  case KernelFamily::tabulated: {
    long nmax = static_cast<long>(spec.eta());
    if (nmax < 4 || x < 1 || x > static_cast<double>(nmax))
      return std::nullopt;
    // cubic through the four table points around floor(x)
    auto interp = [&](double y, long base) {
      long lo = std::clamp(base - 1, 1L, nmax - 3);
      double acc = 0;
      for (long i = lo; i < lo + 4; ++i) {
        double w = 1;
        for (long j = lo; j < lo + 4; ++j)
          if (j != i)
            w *= (y - static_cast<double>(j)) / static_cast<double>(i - j);
        acc += w * spec(i);
      }
      return acc;
    };
    long base = static_cast<long>(std::floor(x));
    const double h = 1e-3;
    double f0 = interp(x, base), fp = interp(x + h, base), fm = interp(x - h, base);
    double d1 = (fp - fm) / (2 * h), d2 = (fp - 2 * f0 + fm) / (h * h);
    return d2 - d1 * f0;
  }
  default:
    return std::nullopt;
  }
}

// Sample grid: n = 1, 1.5, ..., 200 for closed forms; tabulated kernels use
// the half-integer points where the local interpolant is smooth.
inline KernelType classify_kernel(const KernelSpec &spec)
{
  std::vector<double> grid;
  if (spec.family() == KernelFamily::tabulated) {
    long top = std::min(200L, static_cast<long>(spec.eta()));
    for (long k = 1; k < top; ++k)
      grid.push_back(static_cast<double>(k) + 0.5);
  } else {
    for (int k = 0; k <= 398; ++k)
      grid.push_back(1.0 + 0.5 * k);
  }
  int pos = 0, neg = 0;
  for (double x : grid) {
    auto d = classification_quantity(spec, x);
    if (!d || !std::isfinite(*d))
      return KernelType::Indeterminate;
    if (*d > 0)
      ++pos;
    else if (*d < 0)
      ++neg;
    else
      return KernelType::Indeterminate;
  }
  if (grid.empty())
    return KernelType::Indeterminate;
  if (neg == 0)
    return KernelType::Type1;
  if (pos == 0)
    return KernelType::Type2;
  return KernelType::Indeterminate;
}

} // namespace lrcone
