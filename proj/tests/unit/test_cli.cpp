#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lrcone/app.hpp"

using namespace lrcone;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "lrcone");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = app::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p)
{
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string &name)
{
  auto d = fs::temp_directory_path() / ("lrcone_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string header_of(const fs::path &p)
{
  auto s = slurp(p);
  return s.substr(0, s.find('\n'));
}

} // namespace

TEST_CASE("config defaults and layering", "[cli]")
{
  auto c = make_config("sweep", {}, {});
  CHECK(c.p == 2.5);
  CHECK(c.q == 1000);
  CHECK(c.threshold == 1e-5);
  CHECK(std::isinf(c.eta));
  CHECK(c.p_list.size() == 8);
  CHECK(c.eta_list.size() == 15);
  CHECK(std::isinf(c.eta_list.back()));

  auto v = make_config("verify-cancel", {}, {});
  CHECK(v.p_text == "5/2");
  CHECK(v.q == 20);
  CHECK(v.r == 3);

  auto f = make_config("eet", {{"kernel.p", "3"}, {"experiment.q", "50"}}, {{"experiment.q", "60"}});
  CHECK(f.p == 3);
  CHECK(f.q == 60);

  CHECK_THROWS_AS(make_config("eet", {{"kernel.colour", "red"}}, {}), Error);
  CHECK_THROWS_AS(make_config("eet", {}, {{"experiment.threshold", "0"}}), Error);
  CHECK_THROWS_AS(make_config("eet", {}, {{"numeric.bc", "twisted"}}), Error);
  CHECK_THROWS_AS(make_config("eet", {}, {{"experiment.q", "1.5"}}), Error);
  CHECK_THROWS_AS(make_config("eet", {}, {{"numeric.workers", "0"}}), Error);
}

TEST_CASE("list syntax", "[cli]")
{
  auto c = make_config("sweep", {}, {{"experiment.t_grid", "0:1:0.25"}, {"experiment.eta_list", "3:5,inf"}});
  CHECK(c.t_grid == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(c.eta_list.size() == 4);
  CHECK(std::isinf(c.eta_list[3]));
  CHECK_THROWS_AS(make_config("sweep", {}, {{"experiment.t_grid", "1:0"}}), Error);
  CHECK_THROWS_AS(make_config("sweep", {}, {{"experiment.eta_list", "2.5"}}), Error);
}

TEST_CASE("ini files and the output directory variable", "[cli]")
{
  auto dir = scratch("ini");
  auto path = dir / "run.ini";
  {
    std::ofstream f(path);
    f << "[kernel]\np = 3\neta = inf\n\n[experiment]\nq = 44\n";
  }
  auto raw = read_ini(path.string());
  CHECK(raw.at("kernel.p") == "3");
  CHECK(raw.at("experiment.q") == "44");
  CHECK_THROWS_AS(read_ini((dir / "missing.ini").string()), Error);

  ::setenv(out_dir_env, "/tmp/from_env", 1);
  CHECK(make_config("eet", {}, {}).out_dir == "/tmp/from_env");
  CHECK(make_config("eet", {}, {{"output.out_dir", "x"}}).out_dir == "x");
  ::unsetenv(out_dir_env);
  CHECK(make_config("eet", {}, {}).out_dir == "out");
}

TEST_CASE("config hash ignores workers and output directory", "[cli]")
{
  auto a = make_config("sweep", {}, {{"numeric.workers", "1"}, {"output.out_dir", "a"}});
  auto b = make_config("sweep", {}, {{"numeric.workers", "8"}, {"output.out_dir", "b"}});
  auto c = make_config("sweep", {}, {{"kernel.p", "3"}});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("printing subcommands", "[cli]")
{
  auto r = cli({"kernel-eval", "--n", "0"});
  CHECK(r.code == 0);
  CHECK(r.out == "0\n");
  CHECK(cli({"kernel-eval", "--p", "2", "--n", "3"}).out == "0.1111111111111111\n");
  CHECK(cli({"kernel-classify", "--p", "3"}).out == "Type1\n");

  auto dir = scratch("cancel");
  auto v = cli({"verify-cancel", "--out", dir.string()});
  CHECK(v.code == 0);
  CHECK(v.out == "residual = 0 (exact)\n");
  auto w = cli({"verify-cancel", "--r", "1", "--q", "10"});
  CHECK(w.code == 1);
  CHECK(w.out == "residual = -2 (exact)\n");
}

TEST_CASE("errors are one categorised line", "[cli]")
{
  auto a = cli({"eet", "--threshold", "2"});
  CHECK(a.code == 2);
  CHECK(a.err.rfind("error: config: ", 0) == 0);
  CHECK(std::count(a.err.begin(), a.err.end(), '\n') == 1);
  auto b = cli({"eet", "--bogus", "1"});
  CHECK(b.code == 2);
  CHECK(b.err.rfind("error: config: ", 0) == 0);
  auto c = cli({"eet", "--config", "/nonexistent/run.ini"});
  CHECK(c.code == 4);
  CHECK(c.err.rfind("error: io: ", 0) == 0);
  // never reaches 0.9 at this distance: censored, not an error
  auto d = cli({"eet", "--p", "inf", "--q", "100", "--threshold", "0.9", "--out", scratch("censored").string()});
  CHECK(d.code == 0);
  CHECK(d.out.find("(censored)") != std::string::npos);
  auto e = cli({"oracle", "--bc", "open", "--N", "30", "--q", "20"});
  CHECK(e.code == 2);
}

TEST_CASE("output schemas and manifests", "[cli]")
{
  auto dir = scratch("schemas");
  std::string o = dir.string();
  REQUIRE(cli({"alpha", "--out", o, "--R", "3"}).code == 0);
  REQUIRE(cli({"qcurve", "--out", o, "--q", "6", "--t-grid", "0:3:1"}).code == 0);
  REQUIRE(cli({"oracle", "--out", o, "--q", "6", "--N", "128", "--t-grid", "0:3:1"}).code == 0);
  REQUIRE(cli({"conv", "--out", o, "--R", "3", "--W", "40"}).code == 0);
  REQUIRE(cli({"eet", "--out", o, "--q", "50"}).code == 0);
  CHECK(header_of(dir / "alpha.csv") == "q,r,sign,log10_abs,cancel_loss_digits,precision_digits,interval_flag");
  CHECK(header_of(dir / "qcurve.csv") == "t,Q,error_bound,form");
  CHECK(header_of(dir / "oracle.csv") == "t,q,probability,finite_size_bound,N,bc");
  CHECK(header_of(dir / "conv_table.csv") == "r,q,sign,log10_abs,row_error");
  const std::string sweep_cols = "p,eta,sigma,q,threshold,eet_time,t_low,t_high,method,N,bc,censored";
  CHECK(header_of(dir / "eet.csv").rfind(sweep_cols, 0) == 0);
  for (const char *f : {"alpha.csv", "qcurve.csv", "oracle.csv", "conv_table.csv", "eet.csv"}) {
    INFO(f);
    auto m = slurp(dir / (std::string(f) + ".manifest"));
    CHECK(m.find("config_hash = fnv1a64:") != std::string::npos);
    CHECK(m.find("wall_seconds = ") != std::string::npos);
    CHECK(m.find("timestamp_utc = ") != std::string::npos);
  }
  auto t = csv::read((dir / "conv_table.csv").string());
  CHECK(t.rows.size() == 4 * 81);
  auto e = csv::read((dir / "eet.csv").string());
  CHECK(e.values("eta")[0] == "inf");
}

TEST_CASE("data files are identical across worker counts", "[cli][property]")
{
  auto a = scratch("det_a"), b = scratch("det_b");
  std::vector<std::string> base = {"sweep", "--q", "80", "--p-list", "2,3", "--eta-list", "2,inf", "--sigma-list",
                                   "inf,1"};
  auto ra = base, rb = base;
  ra.insert(ra.end(), {"--out", a.string(), "--workers", "1"});
  rb.insert(rb.end(), {"--out", b.string(), "--workers", "3"});
  REQUIRE(cli(ra).code == 0);
  REQUIRE(cli(rb).code == 0);
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  auto ma = slurp(a / "sweep.csv.manifest"), mb = slurp(b / "sweep.csv.manifest");
  auto hash = [](const std::string &m) { return m.substr(m.find("config_hash"), 40); };
  CHECK(hash(ma) == hash(mb));

  auto x = scratch("det_alpha_a"), y = scratch("det_alpha_b");
  REQUIRE(cli({"alpha", "--q", "30", "--out", x.string(), "--workers", "1"}).code == 0);
  REQUIRE(cli({"alpha", "--q", "30", "--out", y.string(), "--workers", "4"}).code == 0);
  CHECK(slurp(x / "alpha.csv") == slurp(y / "alpha.csv"));
}

TEST_CASE("interrupted sweeps resume to the same file", "[cli]")
{
  auto full = scratch("resume_full"), part = scratch("resume_part");
  std::vector<std::string> base = {"sweep", "--q", "80", "--p-list", "2,2.5,3", "--eta-list", "3,inf"};
  auto rf = base;
  rf.insert(rf.end(), {"--out", full.string()});
  REQUIRE(cli(rf).code == 0);
  std::string complete = slurp(full / "sweep.csv");
  // keep the header and the first two rows, as if the run had been killed
  std::istringstream in(complete);
  std::string line, prefix;
  for (int i = 0; i < 3 && std::getline(in, line); ++i)
    prefix += line + "\n";
  {
    std::ofstream f(part / "sweep.csv", std::ios::binary);
    f << prefix;
  }
  auto rp = base;
  rp.insert(rp.end(), {"--out", part.string(), "--resume", "true"});
  REQUIRE(cli(rp).code == 0);
  CHECK(slurp(part / "sweep.csv") == complete);
}

TEST_CASE("table reproduction needs no flags", "[cli]")
{
  auto dir = scratch("table1");
  ::setenv(out_dir_env, dir.string().c_str(), 1);
  auto r = cli({"repro-table1"});
  ::unsetenv(out_dir_env);
  REQUIRE(r.code == 0);
  auto t = csv::read((dir / "table1.csv").string());
  REQUIRE(t.rows.size() == 4);
  auto eta = t.values("eta"), sigma = t.values("sigma");
  CHECK(eta == std::vector<std::string>{"5", "5", "5", "inf"});
  CHECK(sigma == std::vector<std::string>{"inf", "1.5", "0.5", "inf"});
  CHECK(fs::exists(dir / "table1.csv.manifest"));
}
