#pragma once

// Thin owning wrapper over mpfr_t. Precision is explicit per value; new values
// pick up the calling thread's working precision (see PrecisionScope), so
// concurrent tasks never share a mutable precision setting.

#include <mpfr.h>
#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

namespace lrcone::mp {

using Rational = mpq_class;
using Integer = mpz_class;

inline mpfr_prec_t digits_to_bits(int digits)
{
  return static_cast<mpfr_prec_t>(std::ceil(digits * 3.321928094887362)) + 8;
}

inline int bits_to_digits(mpfr_prec_t bits)
{
  return static_cast<int>(std::floor(static_cast<double>(bits - 8) * 0.3010299956639812));
}

namespace detail {
inline mpfr_prec_t &thread_bits()
{
  thread_local mpfr_prec_t bits = digits_to_bits(32);
  return bits;
}
} // namespace detail

inline mpfr_prec_t working_bits() { return detail::thread_bits(); }
inline int working_digits() { return bits_to_digits(working_bits()); }

class PrecisionScope {
 public:
  explicit PrecisionScope(int digits) : saved_(detail::thread_bits())
  {
    detail::thread_bits() = digits_to_bits(digits);
  }
  ~PrecisionScope() { detail::thread_bits() = saved_; }
  PrecisionScope(const PrecisionScope &) = delete;
  PrecisionScope &operator=(const PrecisionScope &) = delete;

 private:
  mpfr_prec_t saved_;
};

class Float {
 public:
  Float() : Float(0L) {}
  Float(int v) : Float(static_cast<long>(v)) {}
  Float(long v)
  {
    mpfr_init2(v_, working_bits());
    mpfr_set_si(v_, v, MPFR_RNDN);
  }
  Float(double v)
  {
    mpfr_init2(v_, working_bits());
    mpfr_set_d(v_, v, MPFR_RNDN);
  }
  Float(long double v)
  {
    mpfr_init2(v_, working_bits());
    mpfr_set_ld(v_, v, MPFR_RNDN);
  }
  explicit Float(const Rational &v)
  {
    mpfr_init2(v_, working_bits());
    mpfr_set_q(v_, v.get_mpq_t(), MPFR_RNDN);
  }
  explicit Float(const std::string &text)
  {
    mpfr_init2(v_, working_bits());
    mpfr_set_str(v_, text.c_str(), 10, MPFR_RNDN);
  }
  Float(const Float &o)
  {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Float(Float &&o) noexcept
  {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  Float &operator=(const Float &o)
  {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Float &operator=(Float &&o) noexcept
  {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Float() { mpfr_clear(v_); }

  static Float with_bits(mpfr_prec_t bits)
  {
    Float f(Uninit{}, bits);
    mpfr_set_zero(f.v_, 1);
    return f;
  }

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }
  mpfr_prec_t bits() const { return mpfr_get_prec(v_); }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(v_, MPFR_RNDN); }
  int sign() const { return mpfr_sgn(v_); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }

  // log10|x| without leaving the double exponent range
  double log10_abs() const
  {
    if (mpfr_zero_p(v_))
      return -HUGE_VAL;
    long e = 0;
    double m = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
    return std::log10(std::fabs(m)) + static_cast<double>(e) * 0.30102999566398120;
  }

  std::string str(int digits) const
  {
    if (mpfr_zero_p(v_))
      return "0";
    if (!mpfr_number_p(v_))
      return mpfr_nan_p(v_) ? "nan" : (mpfr_sgn(v_) > 0 ? "inf" : "-inf");
    char *buf = nullptr;
    mpfr_asprintf(&buf, "%.*Rg", digits, v_);
    std::string s(buf);
    mpfr_free_str(buf);
    return s;
  }

  Float &operator+=(const Float &o)
  {
    widen(o);
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Float &operator-=(const Float &o)
  {
    widen(o);
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Float &operator*=(const Float &o)
  {
    widen(o);
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Float &operator/=(const Float &o)
  {
    widen(o);
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Float &operator*=(long v)
  {
    mpfr_mul_si(v_, v_, v, MPFR_RNDN);
    return *this;
  }
  Float &operator/=(long v)
  {
    mpfr_div_si(v_, v_, v, MPFR_RNDN);
    return *this;
  }

  // this += a*b, single rounding
  void add_product(const Float &a, const Float &b)
  {
    mpfr_fma(v_, a.v_, b.v_, v_, MPFR_RNDN);
  }

  friend Float operator-(const Float &a)
  {
    Float r(Uninit{}, a.bits());
    mpfr_neg(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend Float operator+(const Float &a, const Float &b) { return binary(a, b, mpfr_add); }
  friend Float operator-(const Float &a, const Float &b) { return binary(a, b, mpfr_sub); }
  friend Float operator*(const Float &a, const Float &b) { return binary(a, b, mpfr_mul); }
  friend Float operator/(const Float &a, const Float &b) { return binary(a, b, mpfr_div); }

  friend bool operator<(const Float &a, const Float &b) { return mpfr_less_p(a.v_, b.v_) != 0; }
  friend bool operator>(const Float &a, const Float &b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
  friend bool operator<=(const Float &a, const Float &b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
  friend bool operator>=(const Float &a, const Float &b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }
  friend bool operator==(const Float &a, const Float &b) { return mpfr_equal_p(a.v_, b.v_) != 0; }

  // unary functions; result precision follows the argument
  template <class Fn>
  static Float apply(const Float &a, Fn fn)
  {
    Float r(Uninit{}, a.bits());
    fn(r.v_, a.v_, MPFR_RNDN);
    return r;
  }

 private:
  struct Uninit {};
  Float(Uninit, mpfr_prec_t bits) { mpfr_init2(v_, bits); }

  void widen(const Float &o)
  {
    if (o.bits() > bits())
      mpfr_prec_round(v_, o.bits(), MPFR_RNDN);
  }

  template <class Op>
  static Float binary(const Float &a, const Float &b, Op op)
  {
    Float r(Uninit{}, std::max(a.bits(), b.bits()));
    op(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }

  mpfr_t v_;
};

inline Float abs(const Float &a) { return Float::apply(a, mpfr_abs); }
inline Float sqrt(const Float &a) { return Float::apply(a, mpfr_sqrt); }
inline Float exp(const Float &a) { return Float::apply(a, mpfr_exp); }
inline Float log(const Float &a) { return Float::apply(a, mpfr_log); }
inline Float cos(const Float &a) { return Float::apply(a, mpfr_cos); }
inline Float sin(const Float &a) { return Float::apply(a, mpfr_sin); }
inline Float sinh(const Float &a) { return Float::apply(a, mpfr_sinh); }
inline Float cosh(const Float &a) { return Float::apply(a, mpfr_cosh); }
inline Float gamma(const Float &a) { return Float::apply(a, mpfr_gamma); }
inline Float zeta(const Float &a) { return Float::apply(a, mpfr_zeta); }

inline Float pow(const Float &a, const Float &b)
{
  Float r = Float::with_bits(std::max(a.bits(), b.bits()));
  mpfr_pow(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
  return r;
}

inline Float pow(const Float &a, long n)
{
  Float r = Float::with_bits(a.bits());
  mpfr_pow_si(r.raw(), a.raw(), n, MPFR_RNDN);
  return r;
}

inline Float pi()
{
  Float r = Float::with_bits(working_bits());
  mpfr_const_pi(r.raw(), MPFR_RNDN);
  return r;
}

inline Float factorial(unsigned long n)
{
  Float r = Float::with_bits(working_bits());
  mpfr_fac_ui(r.raw(), n, MPFR_RNDN);
  return r;
}

// 2^e at working precision
inline Float pow2(long e)
{
  Float r(1L);
  mpfr_mul_2si(r.raw(), r.raw(), e, MPFR_RNDN);
  return r;
}

// unit roundoff of a value's precision, as 2^(1-bits)
inline Float ulp_factor(const Float &a) { return pow2(1 - static_cast<long>(a.bits())); }

inline Rational rational_from_double(double v) { return Rational(v); }

inline std::string rational_str(const Rational &v) { return v.get_str(); }

} // namespace lrcone::mp
