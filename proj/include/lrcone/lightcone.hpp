#pragma once

// Light-cone analytics: edge times, sweeps, the cancellation identity, the
// alpha_r scaling and ratio checks, early-time slope fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "kernels.hpp"
#include "magnon.hpp"
#include "mp.hpp"
#include "parallel.hpp"
#include "series.hpp"

namespace lrcone {

enum class EETMethod { oracle, series };

inline const char *method_name(EETMethod m) { return m == EETMethod::oracle ? "oracle" : "series"; }

inline EETMethod parse_eet_method(const std::string &s)
{
  if (s == "oracle")
    return EETMethod::oracle;
  if (s == "series")
    return EETMethod::series;
  config_error("unknown method '" + s + "' (oracle|series)");
}

struct EETRecord {
  double p = 0, eta = inf, sigma = inf;
  long q = 0;
  double threshold = 1e-5;
  double time = 0;
  double t_low = 0, t_high = 0;
  EETMethod method = EETMethod::oracle;
  long N = 0;
  Boundary bc = Boundary::periodic;
  bool censored = false;
  double finite_size_bound = 0; // probability bound at t_low / t_high (oracle)
};

struct EETOptions {
  EETMethod method = EETMethod::oracle;
  long N = 4096;
  Boundary bc = Boundary::periodic;
  double scale = 1.0;
  double diagonal = 0.0;
  double dt = 0.5;
  double bracket = 0.05;
  std::optional<double> t_max; // default 2q
  long max_N = 1L << 16;
  PrecisionPolicy policy;
};

namespace detail {

// first up-crossing of f >= threshold on the march, then bisection
inline std::optional<std::pair<double, double>> first_crossing(const std::function<double(double)> &f, double threshold,
                                                               double dt, double t_max, double bracket)
{
  double lo = 0;
  for (long k = 1;; ++k) {
    double t = std::min(t_max, static_cast<double>(k) * dt);
    if (f(t) >= threshold) {
      double hi = t;
      while (hi - lo > bracket) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) >= threshold)
          hi = mid;
        else
          lo = mid;
      }
      return std::make_pair(lo, hi);
    }
    lo = t;
    if (t >= t_max)
      return std::nullopt;
  }
}

inline void fill_params(EETRecord &rec, const KernelSpec &spec)
{
  rec.p = spec.family() == KernelFamily::nearest_neighbor ? inf : spec.p();
  rec.eta = spec.family() == KernelFamily::power_law ? inf : spec.eta();
  rec.sigma = spec.sigma();
}

} // namespace detail

inline EETRecord eet(const KernelSpec &spec, long q, double threshold, const EETOptions &opt = {})
{
  if (!(threshold > 0 && threshold < 1))
    config_error("threshold must lie in (0, 1)");
  if (q < 0)
    config_error("distance q must be >= 0");
  EETRecord rec;
  detail::fill_params(rec, spec);
  rec.q = q;
  rec.threshold = threshold;
  rec.method = opt.method;
  rec.bc = opt.bc;
  rec.N = opt.N;
  if (q == 0)
    return rec; // Q(0) = 1 already exceeds the threshold
  double t_max = opt.t_max.value_or(2.0 * static_cast<double>(q));

  if (opt.method == EETMethod::series) {
    if (opt.scale != 1.0)
      config_error("series method uses the unscaled kernel (scale = 1)");
    double Su = kernel_sum(spec).upper();
    int R = default_rmax(Su, t_max);
    if (R < 0)
      numeric_error("series horizon t_max = " + csv::format(t_max) + " needs more than the Rmax cap");
    PrecisionPolicy pol = opt.policy;
    pol.initial_digits = std::max(pol.initial_digits, series_digits(Su, t_max));
    pol.max_digits = std::max(pol.max_digits, 2 * pol.initial_digits);
    AlphaSeries a = alpha_series(spec, q, R, pol);
    auto f = [&](double t) { return evaluate_q(a, QForm::unitary, t, Su).Q.to_double(); };
    auto br = detail::first_crossing(f, threshold, opt.dt, t_max, opt.bracket);
    rec.N = 0;
    if (!br) {
      rec.censored = true;
      rec.t_low = t_max;
      rec.time = rec.t_high = inf;
      return rec;
    }
    rec.t_low = br->first;
    rec.t_high = br->second;
    rec.time = 0.5 * (rec.t_low + rec.t_high);
    return rec;
  }

  long N = opt.N;
  if (opt.bc == Boundary::periodic)
    while (2 * q >= N)
      N *= 2;
  for (;;) {
    HoppingMatrix H = build_hopping(spec, N, opt.bc, opt.scale, opt.diagonal, q);
    auto f = [&](double t) { return propagate(H, t, q).probability; };
    auto br = detail::first_crossing(f, threshold, opt.dt, t_max, opt.bracket);
    rec.N = N;
    if (!br) {
      rec.censored = true;
      rec.t_low = t_max;
      rec.time = rec.t_high = inf;
      return rec;
    }
    rec.t_low = br->first;
    rec.t_high = br->second;
    rec.time = 0.5 * (rec.t_low + rec.t_high);
    if (opt.bc == Boundary::open)
      return rec;
    // both bracket ends must be certified for the infinite chain
    auto b1 = finite_size_bound(H, rec.t_low, q), b2 = finite_size_bound(H, rec.t_high, q);
    rec.finite_size_bound = std::max(b1.probability_bound, b2.probability_bound);
    if (rec.finite_size_bound <= threshold / 100 && b1.converged && b2.converged)
      return rec;
    if (2 * N > opt.max_N)
      numeric_error("finite-size bound " + csv::format(rec.finite_size_bound) + " above threshold/100 at N = " +
                    std::to_string(N));
    N *= 2;
  }
}

struct SweepGrid {
  std::vector<double> p;
  std::vector<double> eta;
  std::vector<double> sigma;
};

// deterministic grid order: p outer, then eta, then sigma; sigma is collapsed
// to inf wherever it has no effect (eta = inf)
inline std::vector<std::array<double, 3>> sweep_points(const SweepGrid &g)
{
  if (g.p.empty() || g.eta.empty() || g.sigma.empty())
    config_error("sweep grid lists must be nonempty");
  std::vector<std::array<double, 3>> pts;
  for (double p : g.p)
    for (double e : g.eta) {
      if (std::isinf(e)) {
        pts.push_back({p, e, inf});
        continue;
      }
      for (double s : g.sigma)
        pts.push_back({p, e, s});
    }
  return pts;
}

// Records are produced in grid order; on_record sees them in that order, in
// batches of `workers` points computed concurrently.
inline std::vector<EETRecord> sweep(const SweepGrid &grid, long q, double threshold, const EETOptions &opt = {},
                                    int workers = 1, const std::function<void(const EETRecord &)> &on_record = {},
                                    const std::function<bool(const std::array<double, 3> &)> &skip = {})
{
  auto pts = sweep_points(grid);
  std::vector<std::array<double, 3>> todo;
  for (const auto &pt : pts)
    if (!skip || !skip(pt))
      todo.push_back(pt);
  std::vector<EETRecord> out;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, workers));
  for (std::size_t start = 0; start < todo.size(); start += batch) {
    std::size_t n = std::min(batch, todo.size() - start);
    std::vector<EETRecord> recs(n);
    parallel_for(n, workers, [&](std::size_t i) {
      const auto &pt = todo[start + i];
      recs[i] = eet(KernelSpec::from_parameters(pt[0], pt[1], pt[2]), q, threshold, opt);
      recs[i].eta = pt[1];
      recs[i].sigma = pt[2];
    });
    for (auto &r : recs) {
      if (on_record)
        on_record(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// sum_{r1+r2=2r} C(2r,r1) (-1)^{r1} f(r1) f(r2), f(x) = x + p x (x-1)/q,
// in exact rational arithmetic
inline mp::Rational verify_cancellation(int r, long q, const mp::Rational &p)
{
  if (r <= 0)
    config_error("verify_cancellation needs r > 0");
  if (q <= 2L * r)
    config_error("verify_cancellation needs q > 2r");
  auto f = [&](long x) -> mp::Rational { return mp::Rational(x) + p * mp::Rational(x * (x - 1)) / mp::Rational(q); };
  mp::Rational sum = 0;
  mp::Integer binom = 1;
  for (long r1 = 0; r1 <= 2L * r; ++r1) {
    if (r1 > 0) {
      binom *= (2L * r - r1 + 1);
      binom /= r1;
    }
    mp::Rational term = mp::Rational(binom) * f(r1) * f(2L * r - r1);
    if (r1 % 2)
      sum -= term;
    else
      sum += term;
  }
  sum.canonicalize();
  return sum;
}

struct ScalingPoint {
  long q = 0;
  double beta = 0;      // |alpha_r| q^{2p+4} (2r-2)! / p^4
  double beta_err = 0;
  bool suppressed = false;
  double log10_abs_alpha = 0;
};

struct ScalingResult {
  double p = 0;
  int r = 0;
  std::vector<ScalingPoint> points;
  double max_beta = 0, median_beta = 0;
  // max/median over certified points; suppressed points count as consistent
  double spread() const { return median_beta > 0 ? max_beta / median_beta : inf; }
};

inline double factorial_d(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

inline ScalingResult scaling_from_alpha(const std::vector<AlphaSeries> &series, double p, int r)
{
  ScalingResult out;
  out.p = p;
  out.r = r;
  std::vector<double> vals;
  for (const auto &a : series) {
    const auto &c = a.alpha.at(r);
    ScalingPoint pt;
    pt.q = a.q;
    double norm_log = (2 * p + 4) * std::log10(static_cast<double>(a.q)) + std::log10(factorial_d(2 * r - 2)) -
                      4 * std::log10(p);
    pt.log10_abs_alpha = c.value.log10_abs();
    pt.beta = std::pow(10.0, pt.log10_abs_alpha + norm_log);
    pt.beta_err = std::pow(10.0, c.error.log10_abs() + norm_log);
    pt.suppressed = c.flag == IntervalFlag::suppressed;
    if (!pt.suppressed)
      vals.push_back(pt.beta);
    out.points.push_back(pt);
  }
  if (!vals.empty()) {
    out.max_beta = *std::max_element(vals.begin(), vals.end());
    std::vector<double> s(vals);
    std::sort(s.begin(), s.end());
    std::size_t n = s.size();
    out.median_beta = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  }
  return out;
}

inline ScalingResult scaling_check(const KernelSpec &spec, int r, const std::vector<long> &qs,
                                   const PrecisionPolicy &policy = {})
{
  if (r < 1)
    config_error("scaling_check needs r >= 1");
  for (long q : qs)
    if (2L * r >= q)
      config_error("scaling_check needs 2r < q for every q");
  auto series = alpha_series_batch(spec, qs, r, policy);
  return scaling_from_alpha(series, spec.p(), r);
}

struct RatioPoint {
  long q = 0;
  int r = 0;
  int sign = 0;
  double log10_ratio = 0; // log10 |alpha_r / alpha_hat_r|
  double log10_err = 0;   // log10 of the absolute error on the ratio
  bool suppressed = false;
};

// alpha_{q/2}(q) / alpha_hat with alpha_hat = 1/((q/2)!)^2
inline std::vector<RatioPoint> ratio_check(const KernelSpec &spec, const std::vector<long> &qs,
                                           const PrecisionPolicy &policy = {})
{
  std::vector<RatioPoint> out;
  for (long q : qs) {
    if (q <= 0 || q % 2)
      config_error("ratio_check needs even positive q");
    int r = static_cast<int>(q / 2);
    AlphaSeries a = alpha_series(spec, q, r, policy);
    const auto &c = a.alpha.at(r);
    double lhat = 2.0 * std::lgamma(static_cast<double>(r) + 1.0) / std::log(10.0);
    RatioPoint pt;
    pt.q = q;
    pt.r = r;
    pt.sign = c.value.sign();
    pt.log10_ratio = c.value.log10_abs() + lhat;
    pt.log10_err = c.error.is_zero() ? -inf : c.error.log10_abs() + lhat;
    pt.suppressed = c.flag == IntervalFlag::suppressed;
    out.push_back(pt);
  }
  return out;
}

struct SlopeFit {
  double m = 0;
  double residual = 0; // rms of log10 residuals
  double m_first_half = 0, m_second_half = 0;
};

// least squares of log Q against log t; rejects curved windows
inline SlopeFit slope_fit_samples(const std::vector<double> &t, const std::vector<double> &Q)
{
  if (t.size() != Q.size() || t.size() < 4)
    config_error("slope fit needs at least 4 matching samples");
  auto fit = [&](std::size_t lo, std::size_t hi, double &resid) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      if (!(t[i] > 0) || !(Q[i] > 0))
        numeric_error("slope fit needs positive t and Q");
      double x = std::log10(t[i]), y = std::log10(Q[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double m = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double b = (sy - m * sx) / n;
    double ss = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      double e = std::log10(Q[i]) - (m * std::log10(t[i]) + b);
      ss += e * e;
    }
    resid = std::sqrt(ss / n);
    return m;
  };
  SlopeFit out;
  double r1, r2;
  out.m = fit(0, t.size(), out.residual);
  std::size_t half = t.size() / 2;
  out.m_first_half = fit(0, half, r1);
  out.m_second_half = fit(t.size() - half, t.size(), r2);
  return out;
}

struct SlopeOptions {
  std::optional<std::pair<double, double>> t_window;
  int samples = 21;
  double threshold = 1e-5;  // edge definition for the default window
  double max_curvature = 1; // allowed slope change between half windows
  PrecisionPolicy policy;
};

inline SlopeFit slope_fit(const KernelSpec &spec, long q, QForm form = QForm::unitary, const SlopeOptions &opt = {})
{
  if (q <= 0)
    config_error("slope fit needs q > 0");
  EETOptions eo;
  eo.N = std::max(256L, 16 * q);
  double edge = eet(spec, q, opt.threshold, eo).time;
  double lo, hi;
  if (opt.t_window) {
    lo = opt.t_window->first;
    hi = opt.t_window->second;
    if (!(lo > 0 && hi > lo))
      config_error("slope window needs 0 < t_lo < t_hi");
    if (std::isfinite(edge) && hi > 0.5 * edge)
      numeric_error("slope window reaches past half the edge time (" + csv::format(0.5 * edge) + ")");
  } else {
    hi = 0.5 * edge;
    lo = hi / 10;
  }
  std::vector<double> ts;
  for (int i = 0; i < opt.samples; ++i)
    ts.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (opt.samples - 1)));
  QCurve c = q_curve(spec, q, ts, form, std::nullopt, opt.policy);
  std::vector<double> Q;
  for (const auto &s : c.samples)
    Q.push_back(s.Q.to_double());
  SlopeFit f = slope_fit_samples(ts, Q);
  if (std::fabs(f.m_first_half - f.m_second_half) > opt.max_curvature)
    numeric_error("slope window is curved (half-window slopes " + csv::format(f.m_first_half) + " and " +
                  csv::format(f.m_second_half) + ")");
  return f;
}

// Edge times scale as 1/s with the hopping scale s, so the best s among
// candidates follows from s = 1 runs alone.
struct Calibration {
  double scale = 1;
  double max_rel_dev = 0;
};

inline Calibration calibrate_scale(const std::vector<double> &eet_at_unit_scale, const std::vector<double> &reference,
                                   const std::vector<double> &candidates = {0.5, 1.0})
{
  Calibration best{0, inf};
  for (double s : candidates) {
    double dev = 0;
    for (std::size_t i = 0; i < reference.size(); ++i)
      dev = std::max(dev, std::fabs(eet_at_unit_scale[i] / s - reference[i]) / reference[i]);
    if (dev < best.max_rel_dev)
      best = {s, dev};
  }
  return best;
}

} // namespace lrcone
