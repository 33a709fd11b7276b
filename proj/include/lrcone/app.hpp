#pragma once

// Command-line front end. Everything lives here (not in tools/) so tests can
// drive subcommands in-process.

#include <CLI11.hpp>

#include <fftw3.h>
#include <gmp.h>
#include <mpfr.h>

#include <Eigen/Core>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "convolution.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "kernels.hpp"
#include "lightcone.hpp"
#include "magnon.hpp"
#include "series.hpp"

#ifndef LRCONE_VERSION
#define LRCONE_VERSION "0.0.0"
#endif

namespace lrcone::app {

inline const std::vector<std::string> &subcommands()
{
  static const std::vector<std::string> s = {
      "kernel-eval",    "kernel-classify", "conv",         "alpha", "qcurve", "eet",    "sweep",
      "verify-cancel",  "verify-scaling",  "verify-ratio", "slope", "oracle", "repro-table1",
      "repro-fig3"};
  return s;
}

inline std::string subcommand_help(const std::string &name)
{
  static const std::map<std::string, std::string> h = {
      {"kernel-eval", "print J(n)"},
      {"kernel-classify", "sign of J'' - J'J (Type1, Type2, Indeterminate)"},
      {"conv", "table of J^{*r}(q) -> conv_table.csv"},
      {"alpha", "series coefficients alpha_r(q) -> alpha.csv"},
      {"qcurve", "Q_q(t) on a time grid -> qcurve.csv"},
      {"eet", "edge time for one kernel -> eet.csv"},
      {"sweep", "edge times over p, eta, sigma, q lists -> sweep.csv"},
      {"verify-cancel", "exact residual of the cancellation identity"},
      {"verify-scaling", "normalised |alpha_r(q)| over q_list, max/median <= 10 -> scaling.csv"},
      {"verify-ratio", "alpha_{q/2}(q) against 1/((q/2)!)^2 -> ratio.csv"},
      {"slope", "early-time log-log slope of Q -> slope.csv"},
      {"oracle", "transition probability from the hopping matrix -> oracle.csv"},
      {"repro-table1", "softened-interaction edge times -> table1.csv"},
      {"repro-fig3", "edge time against cutoff eta -> fig3.csv, fig3_nn.csv"}};
  auto it = h.find(name);
  return it == h.end() ? std::string() : it->second;
}

// reference conditions for the softened-interaction table (p = 2.5, q = 1000)
// with their reference edge times
struct Table1Row {
  double eta, sigma, reference;
};
inline const std::vector<Table1Row> &table1_rows()
{
  static const std::vector<Table1Row> rows = {
      {5, inf, 413.0}, {5, 1.5, 417.0}, {5, 0.5, 431.6}, {inf, inf, 455.9}};
  return rows;
}

inline const std::vector<std::string> &sweep_header()
{
  static const std::vector<std::string> h = {"p",      "eta",    "sigma",  "q", "threshold", "eet_time", "t_low",
                                             "t_high", "method", "N",      "bc", "censored", "finite_size_bound"};
  return h;
}

inline std::vector<std::string> sweep_row(const EETRecord &r)
{
  return {csv::format(r.p),         csv::format(r.eta),        csv::format(r.sigma),
          csv::format(r.q),         csv::format(r.threshold),  csv::format(r.time),
          csv::format(r.t_low),     csv::format(r.t_high),     method_name(r.method),
          csv::format(r.N),         boundary_name(r.bc),       r.censored ? "1" : "0",
          csv::format(r.finite_size_bound)};
}

namespace detail {

inline std::string utc_now()
{
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string library_versions()
{
  std::ostringstream s;
  s << "mpfr " << mpfr_get_version() << ", gmp " << gmp_version << ", fftw " << fftw_version << ", eigen "
    << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  return s.str();
}

} // namespace detail

// Output side of one run: data files are written verbatim, and each gets a
// sibling .manifest carrying the hash, versions, wall time and timestamp.
class Run {
 public:
  Run(const RunConfig &cfg, std::ostream &out) : cfg_(cfg), out_(out), start_(std::chrono::steady_clock::now()) {}

  const RunConfig &cfg() const { return cfg_; }
  std::ostream &out() { return out_; }

  std::string path(const std::string &name)
  {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.out_dir, ec);
    if (ec)
      io_error("cannot create output directory " + cfg_.out_dir + ": " + ec.message());
    return (std::filesystem::path(cfg_.out_dir) / name).string();
  }

  void write(const std::string &name, const csv::Writer &w)
  {
    std::string p = path(name);
    w.write(p);
    manifest(name, w.rows());
  }

  void manifest(const std::string &name, std::size_t rows)
  {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ostringstream m;
    m << "tool = lrcone\n"
      << "version = " << LRCONE_VERSION << "\n"
      << "libraries = " << detail::library_versions() << "\n"
      << "subcommand = " << cfg_.subcommand << "\n"
      << "output = " << name << "\n"
      << "rows = " << rows << "\n"
      << "config_hash = fnv1a64:" << cfg_.hash() << "\n"
      << "workers = " << cfg_.workers << "\n"
      << "wall_seconds = " << csv::format(wall) << "\n"
      << "timestamp_utc = " << detail::utc_now() << "\n"
      << "\n[config]\n"
      << cfg_.canonical();
    std::string p = path(name + ".manifest");
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f || !(f << m.str()))
      io_error("cannot write " + p);
    out_ << "wrote " << path(name) << "\n";
  }

 private:
  const RunConfig &cfg_;
  std::ostream &out_;
  std::chrono::steady_clock::time_point start_;
};

namespace cmd {

inline int kernel_eval(Run &run)
{
  const auto &c = run.cfg();
  run.out() << csv::format(c.kernel()(c.n)) << "\n";
  return 0;
}

inline int kernel_classify(Run &run)
{
  run.out() << type_name(classify_kernel(run.cfg().kernel())) << "\n";
  return 0;
}

inline int conv(Run &run)
{
  const auto &c = run.cfg();
  KernelSpec spec = c.kernel();
  ConvTable t = c.W > 0 ? conv_table(spec, c.R, c.W, c.workers) : conv_table_auto(spec, c.R, c.q, 1L << 14, c.workers);
  csv::Writer w({"r", "q", "sign", "log10_abs", "row_error"});
  for (int r = 0; r <= t.R; ++r)
    for (long q = -t.W; q <= t.W; ++q) {
      const auto &v = t.at(r, q);
      w.row({csv::format(r), csv::format(q), csv::format(v.sign), csv::format(v.log10_abs),
             csv::format(t.row_error[r])});
    }
  run.write("conv_table.csv", w);
  run.out() << "W = " << t.W << (t.flagged ? " (flagged: target accuracy not reached)" : "") << "\n";
  return 0;
}

inline csv::Writer alpha_writer() { return csv::Writer({"q", "r", "sign", "log10_abs", "cancel_loss_digits", "precision_digits", "interval_flag"}); }

inline void alpha_rows(csv::Writer &w, const AlphaSeries &a)
{
  for (const auto &c : a.alpha) {
    auto s = c.slog();
    w.row({csv::format(a.q), csv::format(c.r), csv::format(s.sign), csv::format(s.log10_abs),
           csv::format(c.cancel_loss), csv::format(a.precision_digits), flag_name(c.flag)});
  }
}

inline int alpha(Run &run)
{
  const auto &c = run.cfg();
  int R = c.Rmax > 0 ? c.Rmax : c.R;
  AlphaSeries a = alpha_series(c.kernel(), c.q, R, c.policy());
  csv::Writer w = alpha_writer();
  alpha_rows(w, a);
  run.write("alpha.csv", w);
  return 0;
}

inline int qcurve(Run &run)
{
  const auto &c = run.cfg();
  std::optional<int> R;
  if (c.Rmax > 0)
    R = c.Rmax;
  QCurve qc = q_curve(c.kernel(), c.q, c.t_grid, c.form, R, c.policy());
  csv::Writer w({"t", "Q", "error_bound", "form"});
  for (const auto &s : qc.samples)
    w.row({csv::format(s.t), csv::format(s.Q.to_double()), csv::format(s.error_bound), form_name(qc.form)});
  run.write("qcurve.csv", w);
  run.out() << "Rmax = " << qc.Rmax << "\n";
  return 0;
}

inline int eet_cmd(Run &run)
{
  const auto &c = run.cfg();
  EETRecord r = eet(c.kernel(), c.q, c.threshold, c.eet_options());
  r.eta = c.eta;
  r.sigma = c.sigma;
  csv::Writer w(sweep_header());
  w.row(sweep_row(r));
  run.write("eet.csv", w);
  run.out() << "eet = " << csv::format(r.time) << (r.censored ? " (censored)" : "") << "\n";
  return 0;
}

inline std::string point_key(double p, double eta, double sigma)
{
  return csv::format(p) + "," + csv::format(eta) + "," + csv::format(sigma);
}

// Rows are appended as they finish, so an interrupted run leaves a usable
// prefix; with resume, points already present are skipped. The file is
// rewritten in grid order at the end.
inline int sweep_to(Run &run, const std::string &name, const SweepGrid &grid, std::vector<EETRecord> *records = nullptr)
{
  const auto &c = run.cfg();
  const std::string file = run.path(name);
  std::map<std::string, std::string> done;
  const std::string header = [] {
    std::string h;
    for (const auto &x : sweep_header())
      h += (h.empty() ? "" : ",") + x;
    return h;
  }();
  if (c.resume && std::filesystem::exists(file)) {
    csv::Table t = csv::read(file);
    if (t.header != sweep_header())
      config_error("cannot resume: " + file + " has a different header");
    for (const auto &row : t.rows) {
      std::string line;
      for (const auto &x : row)
        line += (line.empty() ? "" : ",") + x;
      done[point_key(csv::parse_double(row[0]), csv::parse_double(row[1]), csv::parse_double(row[2]))] = line;
    }
  }
  {
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f)
      io_error("cannot write " + file);
    f << header << "\n";
    for (const auto &pt : sweep_points(grid))
      if (auto it = done.find(point_key(pt[0], pt[1], pt[2])); it != done.end())
        f << it->second << "\n";
  }
  std::ofstream app(file, std::ios::binary | std::ios::app);
  auto on = [&](const EETRecord &r) {
    std::string line;
    for (const auto &x : sweep_row(r))
      line += (line.empty() ? "" : ",") + x;
    done[point_key(r.p, r.eta, r.sigma)] = line;
    app << line << "\n";
    app.flush();
    if (records)
      records->push_back(r);
  };
  auto skip = [&](const std::array<double, 3> &pt) { return done.count(point_key(pt[0], pt[1], pt[2])) > 0; };
  sweep(grid, c.q, c.threshold, c.eet_options(), c.workers, on, skip);
  app.close();

  csv::Writer w(sweep_header());
  for (const auto &pt : sweep_points(grid))
    w.row(csv::split(done.at(point_key(pt[0], pt[1], pt[2])), ','));
  run.write(name, w);
  return 0;
}

inline int sweep_cmd(Run &run)
{
  const auto &c = run.cfg();
  return sweep_to(run, "sweep.csv", {c.p_list, c.eta_list, c.sigma_list});
}

inline int verify_cancel(Run &run)
{
  const auto &c = run.cfg();
  if (c.p_text == "inf")
    config_error("verify-cancel needs a finite p");
  mp::Rational p = parse_rational(c.p_text);
  mp::Rational res = verify_cancellation(c.r, c.q, p);
  if (res == 0) {
    run.out() << "residual = 0 (exact)\n";
    return 0;
  }
  run.out() << "residual = " << mp::rational_str(res) << " (exact)\n";
  return 1;
}

inline std::vector<long> q_values(const RunConfig &c)
{
  std::vector<long> qs;
  for (double q : c.q_list)
    qs.push_back(static_cast<long>(q));
  return qs;
}

inline int verify_scaling(Run &run)
{
  const auto &c = run.cfg();
  ScalingResult s = scaling_check(c.kernel(), c.r, q_values(c), c.policy());
  csv::Writer w({"p", "r", "q", "beta", "beta_err", "log10_abs_alpha", "suppressed"});
  for (const auto &pt : s.points)
    w.row({csv::format(c.p), csv::format(c.r), csv::format(pt.q), csv::format(pt.beta), csv::format(pt.beta_err),
           csv::format(pt.log10_abs_alpha), pt.suppressed ? "1" : "0"});
  run.write("scaling.csv", w);
  bool ok = s.spread() <= 10;
  run.out() << "max/median beta = " << csv::format(s.spread()) << (ok ? " (bounded)" : " (exceeds 10)") << "\n";
  return ok ? 0 : 1;
}

inline int verify_ratio(Run &run)
{
  const auto &c = run.cfg();
  auto pts = ratio_check(c.kernel(), q_values(c), c.policy());
  csv::Writer w({"p", "q", "r", "sign", "log10_ratio", "log10_err", "suppressed"});
  bool ok = true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto &pt = pts[i];
    w.row({csv::format(c.p), csv::format(pt.q), csv::format(pt.r), csv::format(pt.sign), csv::format(pt.log10_ratio),
           csv::format(pt.log10_err), pt.suppressed ? "1" : "0"});
    if (i > 0 && !(pt.log10_ratio < pts[i - 1].log10_ratio))
      ok = false;
  }
  run.write("ratio.csv", w);
  run.out() << (ok ? "strictly decreasing" : "not strictly decreasing") << "\n";
  return ok ? 0 : 1;
}

inline int slope(Run &run)
{
  const auto &c = run.cfg();
  SlopeOptions o;
  o.t_window = c.t_window;
  o.threshold = c.threshold;
  o.policy = c.policy();
  SlopeFit f = slope_fit(c.kernel(), c.q, c.form, o);
  csv::Writer w({"q", "form", "m", "residual", "m_first_half", "m_second_half"});
  w.row({csv::format(c.q), form_name(c.form), csv::format(f.m), csv::format(f.residual), csv::format(f.m_first_half),
         csv::format(f.m_second_half)});
  run.write("slope.csv", w);
  run.out() << "m = " << csv::format(f.m) << ", residual = " << csv::format(f.residual) << "\n";
  return 0;
}

inline int oracle(Run &run)
{
  const auto &c = run.cfg();
  HoppingMatrix H = build_hopping(c.kernel(), c.N, c.bc, c.scale, c.diagonal, c.q);
  csv::Writer w({"t", "q", "probability", "finite_size_bound", "N", "bc"});
  for (double t : c.t_grid) {
    double fs = c.bc == Boundary::periodic ? finite_size_bound(H, t, c.q).probability_bound
                                           : std::numeric_limits<double>::quiet_NaN();
    w.row({csv::format(t), csv::format(c.q), csv::format(propagate(H, t, c.q).probability), csv::format(fs),
           csv::format(c.N), boundary_name(c.bc)});
  }
  run.write("oracle.csv", w);
  return 0;
}

inline int repro_table1(Run &run)
{
  const auto &c = run.cfg();
  std::vector<double> mine, reference;
  std::vector<EETRecord> recs;
  EETOptions o = c.eet_options();
  o.scale = 1; // calibrated below
  for (const auto &row : table1_rows()) {
    EETRecord r = eet(KernelSpec::from_parameters(c.p, row.eta, row.sigma, c.J0), c.q, c.threshold, o);
    r.eta = row.eta;
    r.sigma = row.sigma;
    recs.push_back(r);
    mine.push_back(r.time);
    reference.push_back(row.reference);
  }
  Calibration cal = calibrate_scale(mine, reference);
  csv::Writer w(sweep_header());
  for (auto r : recs) {
    r.time /= cal.scale;
    r.t_low /= cal.scale;
    r.t_high /= cal.scale;
    w.row(sweep_row(r));
  }
  run.write("table1.csv", w);
  run.out() << "calibrated scale = " << csv::format(cal.scale) << "\n";
  for (std::size_t i = 0; i < recs.size(); ++i)
    run.out() << "eta = " << csv::format(recs[i].eta) << ", sigma = " << csv::format(recs[i].sigma)
              << ": eet = " << csv::format(recs[i].time / cal.scale) << " (reference " << csv::format(reference[i])
              << ", delta " << csv::format(recs[i].time / cal.scale - reference[i]) << ")\n";
  return 0;
}

inline int repro_fig3(Run &run)
{
  const auto &c = run.cfg();
  sweep_to(run, "fig3.csv", {c.p_list, c.eta_list, c.sigma_list});
  EETRecord nn = eet(KernelSpec::nearest_neighbor(c.J0), c.q, c.threshold, c.eet_options());
  csv::Writer w(sweep_header());
  w.row(sweep_row(nn));
  run.write("fig3_nn.csv", w);
  run.out() << "nearest-neighbor eet = " << csv::format(nn.time) << "\n";
  return 0;
}

} // namespace cmd

inline int run(const RunConfig &cfg, std::ostream &out)
{
  static const std::map<std::string, std::function<int(Run &)>> table = {
      {"kernel-eval", cmd::kernel_eval},       {"kernel-classify", cmd::kernel_classify},
      {"conv", cmd::conv},                     {"alpha", cmd::alpha},
      {"qcurve", cmd::qcurve},                 {"eet", cmd::eet_cmd},
      {"sweep", cmd::sweep_cmd},               {"verify-cancel", cmd::verify_cancel},
      {"verify-scaling", cmd::verify_scaling}, {"verify-ratio", cmd::verify_ratio},
      {"slope", cmd::slope},                   {"oracle", cmd::oracle},
      {"repro-table1", cmd::repro_table1},     {"repro-fig3", cmd::repro_fig3}};
  auto it = table.find(cfg.subcommand);
  if (it == table.end())
    config_error("unknown subcommand '" + cfg.subcommand + "'");
  Run r(cfg, out);
  return it->second(r);
}

// flag name -> config key
inline const std::vector<std::pair<std::string, std::string>> &flag_keys()
{
  static const std::vector<std::pair<std::string, std::string>> f = {
      {"--out", "output.out_dir"},          {"--workers", "numeric.workers"},
      {"--precision", "numeric.precision"}, {"--max-precision", "numeric.max_precision"},
      {"--family", "kernel.family"},        {"--p", "kernel.p"},
      {"--eta", "kernel.eta"},              {"--sigma", "kernel.sigma"},
      {"--J0", "kernel.J0"},                {"--table", "kernel.table_path"},
      {"--W", "numeric.W"},                 {"--R", "numeric.R"},
      {"--Rmax", "numeric.Rmax"},           {"--method", "numeric.method"},
      {"--window", "numeric.window"},       {"--N", "numeric.N"},
      {"--bc", "numeric.bc"},               {"--scale", "numeric.scale"},
      {"--diagonal", "numeric.diagonal"},   {"--q", "experiment.q"},
      {"--threshold", "experiment.threshold"}, {"--t-grid", "experiment.t_grid"},
      {"--p-list", "experiment.p_list"},    {"--eta-list", "experiment.eta_list"},
      {"--sigma-list", "experiment.sigma_list"}, {"--q-list", "experiment.q_list"},
      {"--r", "experiment.r"},              {"--n", "experiment.n"},
      {"--form", "experiment.form"},        {"--eet-method", "experiment.eet_method"},
      {"--t-window", "experiment.t_window"}, {"--resume", "experiment.resume"}};
  return f;
}

inline int main_entry(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Light-cone edges of long-range hopping chains"};
  app.set_version_flag("--version", LRCONE_VERSION);
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
  for (const auto &name : subcommands()) {
    CLI::App *sub = app.add_subcommand(name, subcommand_help(name));
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--set", sets, "override any key: section.key=value");
    for (const auto &[flag, key] : flag_keys())
      sub->add_option(flag, flag_values[key], key);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: config: " << e.what() << "\n";
    return exit_code(ErrorCategory::config);
  }
  std::string sub_name = app.get_subcommands().front()->get_name();
  try {
    RawConfig file = config_path.empty() ? RawConfig{} : read_ini(config_path);
    RawConfig over;
    for (const auto &[flag, key] : flag_keys())
      if (app.get_subcommands().front()->count(flag))
        over[key] = flag_values[key];
    for (const auto &s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos)
        config_error("--set expects section.key=value, got '" + s + "'");
      over[s.substr(0, eq)] = s.substr(eq + 1);
    }
    RunConfig cfg = make_config(sub_name, file, over);
    return run(cfg, out);
  } catch (const Error &e) {
    err << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception &e) {
    err << "error: numeric: " << e.what() << "\n";
    return exit_code(ErrorCategory::numeric);
  }
}

} // namespace lrcone::app
