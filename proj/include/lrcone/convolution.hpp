#pragma once

// r-fold self-convolutions J^{*r}(q) on the infinite chain.
//
// conv_table: windowed long double DP (path of record for tables) with a
//   certified uniform row error; conv_table_fft is the quad precision
//   cross-check.
// conv_values: per-distance high precision values for the series module,
//   exact rational when every kernel value is rational and the problem is
//   finite, otherwise extended precision.

#include <fftw3.h>
extern "C" {
#include <quadmath.h>
}

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "error.hpp"
#include "kernels.hpp"
#include "mp.hpp"
#include "parallel.hpp"
#include "signed_log.hpp"
#include "spectral.hpp"

namespace lrcone {

struct ConvTable {
  KernelSpec spec;
  int R = 0;
  long W = 0;
  // rows[r][q + W]
  std::vector<std::vector<SignedLog>> rows;
  std::vector<double> row_error;
  double S = 0;
  double S_upper = 0;
  // set when some requested distance is not resolved to the target accuracy
  bool flagged = false;

  const SignedLog &at(int r, long q) const { return rows.at(r).at(static_cast<std::size_t>(q + W)); }
  long double value(int r, long q) const { return at(r, q).value(); }
};

namespace detail {

// row_error bound: a path of r hops that leaves [-W, W] or uses a hop longer
// than W must contain a hop longer than W/r, so the dropped weight is at most
// r S^{r-1} tail(W/r). Row 1 is exact inside the window.
inline double truncation_part(const KernelSpec &spec, int r, long W, double S)
{
  if (r <= 1)
    return 0.0;
  long w = W / r;
  return r * std::pow(S, r - 1) * spec.tail_bound(w);
}

inline long kernel_reach(const KernelSpec &spec, long W)
{
  return spec.finite_support() ? std::min(W, spec.support_radius()) : W;
}

inline std::mutex &fftw_planner_mutex()
{
  static std::mutex m;
  return m;
}

} // namespace detail

inline ConvTable conv_table(const KernelSpec &spec, int R, long W, int workers = 1)
{
  if (R < 0 || W < 1)
    config_error("conv_table needs R >= 0 and W >= 1");
  ConvTable t{spec, R, W, {}, {}, 0, 0, false};
  KernelSum ks = kernel_sum(spec);
  t.S = ks.S;
  t.S_upper = ks.upper();
  const long reach = detail::kernel_reach(spec, W);
  std::vector<long double> J(static_cast<std::size_t>(reach) + 1);
  for (long d = 1; d <= reach; ++d)
    J[d] = spec.eval_ld(d);

  const std::size_t n = static_cast<std::size_t>(2 * W + 1);
  std::vector<long double> prev(n, 0.0L), next(n, 0.0L);
  prev[W] = 1.0L;
  t.rows.reserve(R + 1);
  t.row_error.reserve(R + 1);
  auto store = [&](const std::vector<long double> &row) {
    std::vector<SignedLog> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = SignedLog::from(row[i]);
    t.rows.push_back(std::move(out));
  };
  store(prev);
  t.row_error.push_back(0.0);
  double rounding = 0;
  long span = 0; // prev is zero outside [-span, span]
  for (int r = 1; r <= R; ++r) {
    long new_span = std::min(W, span + reach);
    // q >= 0 only, mirrored; fixed order d = -reach..reach
    parallel_for(static_cast<std::size_t>(new_span) + 1, workers, [&](std::size_t qi) {
      long q = static_cast<long>(qi);
      long double s = 0;
      long dlo = std::max(-reach, q - span), dhi = std::min(reach, q + span);
      for (long d = dlo; d <= dhi; ++d) {
        if (d == 0)
          continue;
        s += J[std::labs(d)] * prev[static_cast<std::size_t>(q - d + W)];
      }
      next[static_cast<std::size_t>(q + W)] = s;
      next[static_cast<std::size_t>(W - q)] = s;
    });
    std::swap(prev, next);
    std::fill(next.begin(), next.end(), 0.0L);
    span = new_span;
    double terms = static_cast<double>(2 * reach);
    rounding = rounding * t.S_upper + terms * LDBL_EPSILON * std::pow(t.S_upper, r) * 1.01;
    t.row_error.push_back(detail::truncation_part(spec, r, W, t.S_upper) + rounding);
    store(prev);
  }
  return t;
}

// Quad precision FFT route: each row is the previous row convolved with the
// windowed kernel via zero padding to a power of two >= 4W+1, then cut back to
// [-W, W]. No wrap-around by construction.
inline ConvTable conv_table_fft(const KernelSpec &spec, int R, long W)
{
  if (R < 0 || W < 1)
    config_error("conv_table_fft needs R >= 0 and W >= 1");
  ConvTable t{spec, R, W, {}, {}, 0, 0, false};
  KernelSum ks = kernel_sum(spec);
  t.S = ks.S;
  t.S_upper = ks.upper();
  std::size_t L = 1;
  while (L < static_cast<std::size_t>(4 * W + 1))
    L <<= 1;
  const std::size_t nc = L / 2 + 1;
  auto *in = static_cast<__float128 *>(fftwq_malloc(sizeof(__float128) * L));
  auto *spec_k = static_cast<fftwq_complex *>(fftwq_malloc(sizeof(fftwq_complex) * nc));
  auto *buf = static_cast<fftwq_complex *>(fftwq_malloc(sizeof(fftwq_complex) * nc));
  fftwq_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> g(detail::fftw_planner_mutex());
    fwd = fftwq_plan_dft_r2c_1d(static_cast<int>(L), in, buf, FFTW_ESTIMATE);
    bwd = fftwq_plan_dft_c2r_1d(static_cast<int>(L), buf, in, FFTW_ESTIMATE);
  }
  // index i <-> offset i for i <= 2W, offset i - L otherwise
  auto offset_index = [&](long x) { return static_cast<std::size_t>(x >= 0 ? x : static_cast<long>(L) + x); };
  std::fill(in, in + L, __float128(0));
  const long reach = detail::kernel_reach(spec, W);
  for (long d = 1; d <= reach; ++d) {
    __float128 v = spec.eval_ld(d);
    in[offset_index(d)] = v;
    in[offset_index(-d)] = v;
  }
  fftwq_execute(fwd);
  for (std::size_t i = 0; i < nc; ++i) {
    spec_k[i][0] = buf[i][0];
    spec_k[i][1] = buf[i][1];
  }

  const std::size_t n = static_cast<std::size_t>(2 * W + 1);
  std::vector<__float128> row(n, 0);
  row[W] = 1;
  auto store = [&] {
    std::vector<SignedLog> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = SignedLog::from(static_cast<long double>(row[i]));
    t.rows.push_back(std::move(out));
  };
  store();
  t.row_error.push_back(0.0);
  const __float128 invL = __float128(1) / static_cast<__float128>(L);
  double rounding = 0;
  for (int r = 1; r <= R; ++r) {
    std::fill(in, in + L, __float128(0));
    for (long q = -W; q <= W; ++q)
      in[offset_index(q)] = row[static_cast<std::size_t>(q + W)];
    fftwq_execute(fwd);
    for (std::size_t i = 0; i < nc; ++i) {
      __float128 re = buf[i][0] * spec_k[i][0] - buf[i][1] * spec_k[i][1];
      __float128 im = buf[i][0] * spec_k[i][1] + buf[i][1] * spec_k[i][0];
      buf[i][0] = re;
      buf[i][1] = im;
    }
    fftwq_execute(bwd);
    rounding = rounding * t.S_upper + 4.0 * std::log2(static_cast<double>(L)) * 1e-33 * std::pow(t.S_upper, r);
    for (long q = 0; q <= W; ++q) {
      // symmetric by construction; average the two halves to make it exact
      __float128 v = (in[offset_index(q)] + in[offset_index(-q)]) * invL / 2;
      // below the noise floor: structural zeros (J(0) = 0, parity) come out as ~1e-36
      if (fabsq(v) <= rounding)
        v = 0;
      row[static_cast<std::size_t>(q + W)] = v;
      row[static_cast<std::size_t>(W - q)] = v;
    }
    t.row_error.push_back(detail::truncation_part(spec, r, W, t.S_upper) + rounding);
    store();
  }
  {
    std::lock_guard<std::mutex> g(detail::fftw_planner_mutex());
    fftwq_destroy_plan(fwd);
    fftwq_destroy_plan(bwd);
  }
  fftwq_free(in);
  fftwq_free(spec_k);
  fftwq_free(buf);
  return t;
}

// Window W = max(4 q_max, 512), doubled until row R at q_max carries a
// certified error below 1e-3 relative or W reaches max_window (then flagged).
inline ConvTable conv_table_auto(const KernelSpec &spec, int R, long q_max, long max_window = 1L << 14,
                                 int workers = 1)
{
  long W = std::max(4 * q_max, 512L);
  if (spec.finite_support())
    W = std::max(W, std::max(q_max, static_cast<long>(R) * spec.support_radius()));
  for (;;) {
    ConvTable t = conv_table(spec, R, W, workers);
    bool ok = true;
    for (int r = 1; r <= R; ++r) {
      double v = std::fabs(static_cast<double>(t.value(r, q_max)));
      if (!(t.row_error[r] <= 1e-3 * v) && v != 0.0) {
        ok = false;
        break;
      }
      if (v == 0.0 && t.row_error[r] > 0.0)
        ok = false;
    }
    if (ok || spec.finite_support())
      return t;
    if (W * 2 > max_window) {
      t.flagged = true;
      return t;
    }
    W *= 2;
  }
}

// max over (r, q) of |a - b| / max(|b|, 1e-20 S^r). Entries more than 20
// decades below the row scale compare absolutely; the quad FFT resolves about
// 1e-31 S^r, so a tighter floor would measure its noise.
inline double max_relative_difference(const ConvTable &a, const ConvTable &b)
{
  double worst = 0;
  for (int r = 0; r <= std::min(a.R, b.R); ++r) {
    long double floor = 1e-20L * std::pow(static_cast<long double>(a.S_upper), r);
    for (long q = -std::min(a.W, b.W); q <= std::min(a.W, b.W); ++q) {
      long double x = a.value(r, q), y = b.value(r, q);
      long double d = std::fabs(x - y) / std::max(std::fabs(y), floor);
      worst = std::max(worst, static_cast<double>(d));
    }
  }
  return worst;
}

enum class ConvMethod { automatic, exact_dp, mp_dp, spectral };

inline const char *method_name(ConvMethod m)
{
  switch (m) {
  case ConvMethod::automatic: return "automatic";
  case ConvMethod::exact_dp: return "exact";
  case ConvMethod::mp_dp: return "extended_dp";
  case ConvMethod::spectral: return "spectral";
  }
  return "?";
}

struct ConvColumn {
  long q = 0;
  std::vector<mp::Float> value; // k = 0..kmax
  std::vector<mp::Float> error; // absolute
  std::vector<mp::Rational> exact; // filled by the exact route only
};

struct ConvValues {
  ConvMethod method = ConvMethod::automatic;
  int digits = 0;
  std::optional<long> window; // explicit truncation, if any
  bool converged = true;
  std::vector<ConvColumn> columns;
};

// Which route a request takes. An explicit window asks for the truncated
// problem (hops and positions limited to [-W, W]).
inline ConvMethod resolve_method(const KernelSpec &spec, ConvMethod m, std::optional<long> window)
{
  if (m != ConvMethod::automatic)
    return m;
  bool rational_on_window = spec.exact_rational() || (window && spec.integer_p() &&
                                                      (spec.family() == KernelFamily::power_law ||
                                                       spec.family() == KernelFamily::sharp_truncated));
  if (window)
    return rational_on_window ? ConvMethod::exact_dp : ConvMethod::mp_dp;
  if (spec.finite_support())
    return spec.exact_rational() ? ConvMethod::exact_dp : ConvMethod::mp_dp;
  return ConvMethod::spectral;
}

namespace detail {

// DP over x in [-X, X] restricted to |x| <= X, hop range [-reach, reach];
// T is mp::Rational or mp::Float. Returns rows[k][x + X] for the requested
// distances only.
template <class T, class KernelAt>
std::vector<std::vector<T>> window_dp(long X, long reach, int kmax, const std::vector<long> &qs, KernelAt Jat,
                                      int workers)
{
  const std::size_t n = static_cast<std::size_t>(2 * X + 1);
  std::vector<T> J(static_cast<std::size_t>(reach) + 1);
  for (long d = 1; d <= reach; ++d)
    J[d] = Jat(d);
  std::vector<T> prev(n, T(0L)), next(n, T(0L));
  prev[X] = T(1L);
  std::vector<std::vector<T>> out(qs.size(), std::vector<T>(static_cast<std::size_t>(kmax) + 1, T(0L)));
  auto record = [&](int k) {
    for (std::size_t i = 0; i < qs.size(); ++i)
      if (std::labs(qs[i]) <= X)
        out[i][k] = prev[static_cast<std::size_t>(qs[i] + X)];
  };
  record(0);
  long span = 0;
  const int digits = mp::working_digits();
  for (int k = 1; k <= kmax; ++k) {
    long new_span = std::min(X, span + reach);
    parallel_for(static_cast<std::size_t>(new_span) + 1, workers, [&](std::size_t qi) {
      mp::PrecisionScope scope(digits);
      long q = static_cast<long>(qi);
      T s(0L);
      long dlo = std::max(-reach, q - span), dhi = std::min(reach, q + span);
      for (long d = dlo; d <= dhi; ++d) {
        if (d == 0)
          continue;
        const T &v = prev[static_cast<std::size_t>(q - d + X)];
        if constexpr (std::is_same_v<T, mp::Float>)
          s.add_product(J[std::labs(d)], v);
        else
          s += J[std::labs(d)] * v;
      }
      next[static_cast<std::size_t>(q + X)] = s;
      next[static_cast<std::size_t>(X - q)] = s;
    });
    std::swap(prev, next);
    span = new_span;
    record(k);
  }
  return out;
}

} // namespace detail

// J^{*k}(q) for k = 0..kmax and every q in qs, at `digits` significant digits.
inline ConvValues conv_values(const KernelSpec &spec, const std::vector<long> &qs, int kmax, int digits,
                              ConvMethod method = ConvMethod::automatic, std::optional<long> window = std::nullopt,
                              int workers = 1)
{
  if (kmax < 0)
    config_error("convolution order must be >= 0");
  mp::PrecisionScope scope(digits);
  ConvValues out;
  out.method = resolve_method(spec, method, window);
  out.digits = digits;
  out.window = window;
  out.columns.resize(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i)
    out.columns[i].q = qs[i];
  long qmax = 0;
  for (long q : qs)
    qmax = std::max(qmax, std::labs(q));

  // range needed by an untruncated finite-support DP
  long X, reach;
  if (window) {
    if (*window < 1)
      config_error("window must be >= 1");
    X = *window;
    reach = detail::kernel_reach(spec, X);
  } else if (spec.finite_support()) {
    reach = spec.support_radius();
    X = std::max(qmax, static_cast<long>(kmax) * reach);
  } else {
    X = reach = 0;
  }

  switch (out.method) {
  case ConvMethod::exact_dp: {
    // integer DP on J(d) * D with D the lcm of the kernel denominators;
    // row k is then scaled by D^k
    std::vector<mp::Rational> Jq(static_cast<std::size_t>(reach) + 1);
    mp::Integer D = 1;
    for (long d = 1; d <= reach; ++d) {
      auto e = spec.eval_exact(d);
      if (!e)
        numeric_error("kernel value at " + std::to_string(d) + " is not rational");
      Jq[d] = *e;
      mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), Jq[d].get_den_mpz_t());
    }
    auto rows = detail::window_dp<mp::Integer>(
        X, reach, kmax, qs, [&](long d) { return mp::Integer(Jq[d] * mp::Rational(D)); }, workers);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      auto &c = out.columns[i];
      mp::Integer Dk = 1;
      for (int k = 0; k <= kmax; ++k) {
        if (k > 0)
          Dk *= D;
        mp::Rational v(rows[i][k], Dk);
        v.canonicalize();
        c.exact.push_back(v);
        c.value.emplace_back(v);
        c.error.push_back(mp::abs(c.value.back()) * mp::ulp_factor(c.value.back()));
      }
    }
    break;
  }
  case ConvMethod::mp_dp: {
    if (!window && !spec.finite_support())
      config_error("extended precision DP needs a finite support or an explicit window");
    int work = digits + 10;
    mp::PrecisionScope inner(work);
    auto rows = detail::window_dp<mp::Float>(X, reach, kmax, qs, [&](long d) { return spec.eval_mp(d); }, workers);
    double Sabs = 0;
    for (long d = 1; d <= reach; ++d)
      Sabs += 2 * std::fabs(spec(d));
    Sabs *= 1 + 1e-12;
    mp::Float u = mp::pow2(-static_cast<long>(mp::digits_to_bits(work)) + 1);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      auto &c = out.columns[i];
      mp::Float err(0L);
      mp::Float Sk(1L);
      for (int k = 0; k <= kmax; ++k) {
        // per row: (2 reach + 1) accumulations plus kernel value rounding
        if (k > 0) {
          err = err * mp::Float(Sabs) + u * mp::Float(static_cast<long>(2 * reach + 2)) * Sk * mp::Float(Sabs);
          Sk *= mp::Float(Sabs);
        }
        c.value.push_back(rows[i][k]);
        c.error.push_back(err);
      }
    }
    break;
  }
  case ConvMethod::spectral: {
    if (window)
      config_error("spectral route has no window; use the DP routes for truncated problems");
    auto sv = spectral_convolutions(spec, qs, kmax, digits, workers);
    out.converged = sv.converged;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      auto &c = out.columns[i];
      c.value = std::move(sv.value[i]);
      c.error = std::move(sv.error[i]);
      // k = 0 and k = 1 are known exactly
      c.value[0] = mp::Float(qs[i] == 0 ? 1L : 0L);
      c.error[0] = mp::Float(0L);
      if (kmax >= 1) {
        c.value[1] = spec.eval_mp(qs[i]);
        c.error[1] = mp::abs(c.value[1]) * mp::ulp_factor(c.value[1]);
      }
    }
    break;
  }
  case ConvMethod::automatic:
    break;
  }
  return out;
}

struct ConvValue {
  mp::Float value;
  mp::Float error;
  std::optional<mp::Rational> exact;
  ConvMethod method;
};

inline ConvValue conv_value(const KernelSpec &spec, int r, long q, int digits,
                            ConvMethod method = ConvMethod::automatic, std::optional<long> window = std::nullopt)
{
  if (r < 0)
    config_error("convolution order must be >= 0");
  if (digits < 16)
    config_error("digits must be at least 16");
  auto v = conv_values(spec, {q}, r, digits, method, window);
  auto &c = v.columns[0];
  ConvValue out{c.value[r], c.error[r], std::nullopt, v.method};
  if (!c.exact.empty())
    out.exact = c.exact[r];
  if (!v.converged)
    numeric_error("quadrature did not reach " + std::to_string(digits) + " digits for J^{*" + std::to_string(r) +
                  "}(" + std::to_string(q) + ")");
  return out;
}

} // namespace lrcone
