#pragma once

// Run configuration: INI file ([kernel] [numeric] [experiment] [output])
// overlaid by command-line values, validated into typed fields.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "convolution.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "kernels.hpp"
#include "lightcone.hpp"
#include "magnon.hpp"
#include "series.hpp"

namespace lrcone {

inline constexpr const char *out_dir_env = "LRCONE_OUT_DIR";

using RawConfig = std::map<std::string, std::string>;

inline const RawConfig &base_defaults()
{
  static const RawConfig d = {
      {"kernel.family", ""},
      {"kernel.p", "2.5"},
      {"kernel.eta", "inf"},
      {"kernel.sigma", "inf"},
      {"kernel.J0", "1"},
      {"kernel.table_path", ""},
      {"numeric.W", "0"},
      {"numeric.R", "6"},
      {"numeric.Rmax", "0"},
      {"numeric.precision", "32"},
      {"numeric.max_precision", "512"},
      {"numeric.method", "auto"},
      {"numeric.window", ""},
      {"numeric.N", "4096"},
      {"numeric.bc", "periodic"},
      {"numeric.scale", "1"},
      {"numeric.diagonal", "0"},
      {"numeric.workers", "1"},
      {"experiment.q", "1000"},
      {"experiment.threshold", "1e-5"},
      {"experiment.t_grid", "0:10:0.5"},
      {"experiment.p_list", "1.7,1.9,2,2.1,2.3,2.5,2.9,3.5"},
      {"experiment.eta_list", "1:14,inf"},
      {"experiment.sigma_list", "inf"},
      {"experiment.q_list", "20:200:20"},
      {"experiment.r", "3"},
      {"experiment.n", "1"},
      {"experiment.form", "unitary"},
      {"experiment.eet_method", "oracle"},
      {"experiment.t_window", ""},
      {"experiment.resume", "false"},
      {"output.out_dir", "out"},
      {"output.formats", "csv"},
  };
  return d;
}

// per-subcommand defaults where the global q = 1000 is out of reach of the
// series route or the operation has a natural setting of its own
inline RawConfig subcommand_defaults(const std::string &sub)
{
  if (sub == "verify-cancel")
    return {{"experiment.q", "20"}, {"experiment.r", "3"}, {"kernel.p", "5/2"}};
  if (sub == "verify-scaling")
    return {{"experiment.r", "2"}, {"experiment.q_list", "20:200:20"}};
  if (sub == "verify-ratio")
    return {{"kernel.p", "3"}, {"experiment.q_list", "10,20,30,40"}};
  if (sub == "slope")
    return {{"experiment.q", "8"}};
  if (sub == "alpha" || sub == "qcurve" || sub == "oracle" || sub == "conv")
    return {{"experiment.q", "20"}};
  return {};
}

inline RawConfig read_ini(const std::string &path)
{
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error &e) {
    if (e.line() == 0)
      io_error("cannot read config " + path);
    config_error(std::string(e.what()));
  }
  RawConfig raw;
  for (const auto &[section, body] : pt) {
    if (body.empty())
      config_error("key '" + section + "' outside a [section] in " + path);
    for (const auto &[key, value] : body)
      raw[section + "." + key] = value.get_value<std::string>();
  }
  return raw;
}

namespace detail {

inline std::string trim(std::string s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
    ++i;
  return s.substr(i);
}

inline long parse_long(const std::string &key, const std::string &v)
{
  double d = csv::parse_double(v);
  if (!std::isfinite(d) || d != std::floor(d) || std::fabs(d) > 9e15)
    config_error(key + " must be an integer, got '" + v + "'");
  return static_cast<long>(d);
}

inline bool parse_bool(const std::string &key, const std::string &v)
{
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  config_error(key + " must be true or false, got '" + v + "'");
}

// "a,b,c" with items either numbers, "inf", or ranges start:stop[:step]
inline std::vector<double> parse_list(const std::string &key, const std::string &v)
{
  std::vector<double> out;
  for (const auto &item : csv::split(v, ',')) {
    if (item.empty())
      config_error(key + " has an empty item");
    auto parts = csv::split(item, ':');
    try {
      if (parts.size() == 1) {
        out.push_back(csv::parse_double(parts[0]));
        continue;
      }
      if (parts.size() > 3)
        config_error(key + ": bad range '" + item + "'");
      double a = csv::parse_double(parts[0]), b = csv::parse_double(parts[1]);
      double step = parts.size() == 3 ? csv::parse_double(parts[2]) : 1.0;
      if (!(step > 0) || !std::isfinite(a) || !std::isfinite(b) || b < a)
        config_error(key + ": bad range '" + item + "'");
      long n = static_cast<long>(std::floor((b - a) / step + 1e-9));
      if (n > 1000000)
        config_error(key + ": range too long");
      for (long i = 0; i <= n; ++i)
        out.push_back(a + static_cast<double>(i) * step);
    } catch (const Error &e) {
      config_error(key + ": " + e.what());
    }
  }
  if (out.empty())
    config_error(key + " is empty");
  return out;
}

} // namespace detail

struct RunConfig {
  std::string subcommand;
  RawConfig raw; // effective values after defaults and overrides

  // kernel
  std::string family;
  std::string p_text;
  double p = 2.5, eta = inf, sigma = inf, J0 = 1;
  std::string table_path;
  // numeric
  long W = 0;
  int R = 6;
  int Rmax = 0;
  int precision = 32, max_precision = 512;
  ConvMethod method = ConvMethod::automatic;
  std::optional<long> window;
  long N = 4096;
  Boundary bc = Boundary::periodic;
  double scale = 1, diagonal = 0;
  int workers = 1;
  // experiment
  long q = 1000;
  double threshold = 1e-5;
  std::vector<double> t_grid, p_list, eta_list, sigma_list, q_list;
  int r = 3;
  long n = 1;
  QForm form = QForm::unitary;
  EETMethod eet_method = EETMethod::oracle;
  std::optional<std::pair<double, double>> t_window;
  bool resume = false;
  // output
  std::string out_dir;
  std::string formats = "csv";

  KernelSpec kernel() const
  {
    if (family.empty())
      return KernelSpec::from_parameters(p, eta, sigma, J0);
    switch (parse_family(family)) {
    case KernelFamily::power_law: return KernelSpec::power_law(p, J0);
    case KernelFamily::sharp_truncated:
      if (std::isinf(eta))
        config_error("sharp_truncated needs a finite eta");
      return KernelSpec::sharp_truncated(p, static_cast<long>(eta), J0);
    case KernelFamily::soft_truncated:
      if (std::isinf(eta) || std::isinf(sigma))
        config_error("soft_truncated needs finite eta and sigma");
      return KernelSpec::soft_truncated(p, static_cast<long>(eta), sigma, J0);
    case KernelFamily::nearest_neighbor: return KernelSpec::nearest_neighbor(J0);
    case KernelFamily::tabulated:
      if (table_path.empty())
        config_error("tabulated kernel needs kernel.table_path");
      return KernelSpec::load_table(table_path, J0);
    }
    config_error("bad family");
  }

  PrecisionPolicy policy() const
  {
    PrecisionPolicy pol;
    pol.initial_digits = precision;
    pol.max_digits = max_precision;
    pol.method = method;
    pol.window = window;
    pol.workers = workers;
    return pol;
  }

  EETOptions eet_options() const
  {
    EETOptions o;
    o.method = eet_method;
    o.N = N;
    o.bc = bc;
    o.scale = scale;
    o.diagonal = diagonal;
    o.policy = policy();
    return o;
  }

  // sorted key = value lines of everything that can change data files
  std::string canonical() const
  {
    std::string s = "subcommand = " + subcommand + "\n";
    for (const auto &[k, v] : raw) {
      if (k == "output.out_dir" || k == "numeric.workers")
        continue;
      s += k + " = " + v + "\n";
    }
    return s;
  }

  std::string hash() const
  {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

// defaults < subcommand defaults < file < overrides; unknown keys rejected
inline RunConfig make_config(const std::string &sub, const RawConfig &file, const RawConfig &overrides)
{
  RawConfig raw = base_defaults();
  if (const char *env = std::getenv(out_dir_env); env && *env)
    raw["output.out_dir"] = env;
  for (const auto &[k, v] : subcommand_defaults(sub))
    raw[k] = v;
  for (const auto *layer : {&file, &overrides})
    for (const auto &[k, v] : *layer) {
      if (!base_defaults().count(k))
        config_error("unknown config key '" + k + "'");
      raw[k] = detail::trim(v);
    }

  RunConfig c;
  c.subcommand = sub;
  c.raw = raw;
  auto get = [&](const char *k) -> const std::string & { return raw.at(k); };
  auto num = [&](const char *k) { return csv::parse_double(get(k)); };
  auto integer = [&](const char *k) { return detail::parse_long(k, get(k)); };
  c.family = get("kernel.family");
  if (!c.family.empty())
    parse_family(c.family);
  c.p_text = get("kernel.p");
  if (c.p_text == "inf") {
    c.p = inf;
  } else {
    try {
      c.p = parse_rational(c.p_text).get_d();
    } catch (const Error &) {
      config_error("kernel.p must be a number, fraction or inf, got '" + c.p_text + "'");
    }
  }
  c.eta = num("kernel.eta");
  c.sigma = num("kernel.sigma");
  c.J0 = num("kernel.J0");
  c.table_path = get("kernel.table_path");

  c.W = integer("numeric.W");
  c.R = static_cast<int>(integer("numeric.R"));
  c.Rmax = static_cast<int>(integer("numeric.Rmax"));
  c.precision = static_cast<int>(integer("numeric.precision"));
  c.max_precision = static_cast<int>(integer("numeric.max_precision"));
  const std::string &m = get("numeric.method");
  if (m == "auto")
    c.method = ConvMethod::automatic;
  else if (m == "exact")
    c.method = ConvMethod::exact_dp;
  else if (m == "extended_dp")
    c.method = ConvMethod::mp_dp;
  else if (m == "spectral")
    c.method = ConvMethod::spectral;
  else
    config_error("numeric.method must be auto|exact|extended_dp|spectral");
  if (!get("numeric.window").empty())
    c.window = integer("numeric.window");
  c.N = integer("numeric.N");
  c.bc = parse_boundary(get("numeric.bc"));
  c.scale = num("numeric.scale");
  c.diagonal = num("numeric.diagonal");
  c.workers = static_cast<int>(integer("numeric.workers"));

  c.q = integer("experiment.q");
  c.threshold = num("experiment.threshold");
  c.t_grid = detail::parse_list("experiment.t_grid", get("experiment.t_grid"));
  c.p_list = detail::parse_list("experiment.p_list", get("experiment.p_list"));
  c.eta_list = detail::parse_list("experiment.eta_list", get("experiment.eta_list"));
  c.sigma_list = detail::parse_list("experiment.sigma_list", get("experiment.sigma_list"));
  c.q_list = detail::parse_list("experiment.q_list", get("experiment.q_list"));
  c.r = static_cast<int>(integer("experiment.r"));
  c.n = integer("experiment.n");
  c.form = parse_form(get("experiment.form"));
  c.eet_method = parse_eet_method(get("experiment.eet_method"));
  if (!get("experiment.t_window").empty()) {
    auto parts = csv::split(get("experiment.t_window"), ':');
    if (parts.size() != 2)
      config_error("experiment.t_window must be lo:hi");
    c.t_window = std::make_pair(csv::parse_double(parts[0]), csv::parse_double(parts[1]));
  }
  c.resume = detail::parse_bool("experiment.resume", get("experiment.resume"));
  c.out_dir = get("output.out_dir");
  c.formats = get("output.formats");

  // validation up front
  if (c.workers < 1)
    config_error("numeric.workers must be >= 1");
  if (c.R < 0 || c.Rmax < 0)
    config_error("numeric.R and numeric.Rmax must be >= 0");
  if (c.W < 0)
    config_error("numeric.W must be >= 0");
  if (c.precision < 16 || c.max_precision < c.precision)
    config_error("numeric.precision must be >= 16 and <= numeric.max_precision");
  if (c.N < 3)
    config_error("numeric.N must be >= 3");
  if (!(c.threshold > 0 && c.threshold < 1))
    config_error("experiment.threshold must lie in (0, 1)");
  if (c.q < 0)
    config_error("experiment.q must be >= 0");
  for (double t : c.t_grid)
    if (!std::isfinite(t))
      config_error("experiment.t_grid must be finite");
  for (double q : c.q_list)
    if (!std::isfinite(q) || q != std::floor(q) || q < 0)
      config_error("experiment.q_list must hold nonnegative integers");
  for (double e : c.eta_list)
    if (!std::isinf(e) && (e < 1 || e != std::floor(e)))
      config_error("experiment.eta_list must hold positive integers or inf");
  if (c.formats != "csv")
    config_error("output.formats supports only csv");
  if (c.window && *c.window < 1)
    config_error("numeric.window must be >= 1");
  return c;
}

} // namespace lrcone
