#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fpedge/config.hpp"
#include "fpedge/error.hpp"
#include "fpedge/harness.hpp"
#include "fpedge/io.hpp"
#include "fpedge/random.hpp"
#include "fpedge/tracywidom.hpp"
#include "oracles.hpp"

using namespace fpedge;

namespace {

ExperimentConfig gue_control(std::size_t n, std::size_t samples) {
  ExperimentConfig cfg;
  cfg.measure1 = {"point_mass", {0.0}, {}};
  cfg.measure2 = cfg.measure1;
  cfg.t = 1.0;
  cfg.n = n;
  cfg.n_samples = samples;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("KS distance basics") {
  const std::size_t n = 50;
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = (i + 0.5) / n;
  CHECK(std::abs(ks_statistic(q, [](double x) { return std::clamp(x, 0.0, 1.0); }) - 0.5 / n) < 1e-15);
  CHECK(ks_statistic(q, q) == 0.0);
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, [](double) { return 0.0; }), DomainError);
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, q), DomainError);
  CHECK(ks_statistic(std::vector<double>{0.0, 1.0}, std::vector<double>{2.0, 3.0}) == 1.0);

  Rng rng(5, 0);
  std::vector<double> u(10000);
  for (double& x : u) x = rng.uniform();
  CHECK(ks_statistic(u, [](double x) { return x; }) <= oracle::ks_critical_01(10000.0));
  CHECK(ks_pvalue(0.0, 100.0) == 1.0);
  CHECK(ks_pvalue(0.5, 100.0) < 1e-10);
  CHECK(std::abs(ks_pvalue(1.36 / std::sqrt(1e4), 1e4) - 0.05) < 0.005);
}

TEST_CASE("percentile and median") {
  std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(median(v) == 3.0);
  CHECK(median({1.0, 2.0}) == 1.5);
  CHECK(percentile(v, 1.0) == 5.0);
  CHECK(percentile(v, 0.2) == 1.0);
  CHECK(percentile(v, 0.95) == 5.0);
  CHECK_THROWS_AS(percentile(v, 0.0), DomainError);
}

TEST_CASE("parallel_for covers all indices and rethrows the lowest failure") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 17 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    FAIL("no exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = gue_control(50, 10);
  CHECK_NOTHROW(validate(cfg));
  cfg.n_samples = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = gue_control(50, 10);
  cfg.ks_threshold = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = gue_control(50, 10);
  cfg.chi = 0.4;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = gue_control(50, 10);
  cfg.measure1 = {"uniform", {1.0, -1.0}, {}};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("single-sample KS") {
  const ExperimentReport r = run_tw_experiment(gue_control(40, 1));
  const TWEvaluator ev;
  const double f = tw2_cdf_clamped(ev, r.samples[0][2]);
  CHECK(std::abs(r.statistic - std::max(f, 1.0 - f)) < 1e-15);
}

TEST_CASE("reports are independent of the worker count") {
  ExperimentConfig cfg = gue_control(50, 40);
  const ExperimentReport a = run_tw_experiment(cfg);
  cfg.workers = 3;
  const ExperimentReport b = run_tw_experiment(cfg);
  CHECK(a.samples == b.samples);
  nlohmann::json ja = to_json(a), jb = to_json(b);
  ja["config"].erase("workers");
  jb["config"].erase("workers");
  CHECK(ja == jb);
  CHECK(to_json(a)["ks"].is_number());
  CHECK(to_json(a)["stats"].contains("mean"));
  CHECK(to_json(a)["stats"].contains("ecdf"));
}

TEST_CASE("report files are byte-identical across reruns") {
  const auto dir = std::filesystem::temp_directory_path() / "fpedge_harness_test";
  std::filesystem::remove_all(dir);
  const ExperimentConfig cfg = gue_control(30, 20);
  write_report(run_tw_experiment(cfg), (dir / "a").string());
  write_report(run_tw_experiment(cfg), (dir / "b").string());
  for (const char* f : {"verify_tw.json", "verify_tw_samples.csv"}) {
    const std::string x = slurp(dir / "a" / f);
    CHECK(!x.empty());
    CHECK(x == slurp(dir / "b" / f));
  }
}

TEST_CASE("more samples do not inflate the KS distance on the GUE control") {
  std::vector<double> small, large;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    ExperimentConfig cfg = gue_control(100, 500);
    cfg.seed = 1000 + rep;
    small.push_back(run_tw_experiment(cfg).statistic);
    cfg.n_samples = 2000;
    cfg.seed = 2000 + rep;
    large.push_back(run_tw_experiment(cfg).statistic);
  }
  CHECK(median(large) - median(small) <= 0.01);
}

TEST_CASE("local law with a diagonal matrix is exact") {
  ExperimentConfig cfg;
  cfg.measure1 = {"semicircle", {1.0}, {}};
  cfg.measure2 = {"point_mass", {0.0}, {}};
  cfg.theory = "limit";
  cfg.sizes = {20, 40, 80};
  cfg.n_samples = 3;
  const ExperimentReport r = run_local_law_experiment(cfg);
  REQUIRE(r.stats["sizes"].size() == 3);
  for (const auto& row : r.samples) CHECK(row[2] < 1e-12);
}

TEST_CASE("local law report structure") {
  ExperimentConfig cfg;
  cfg.measure1 = {"uniform", {-1.0, 1.0}, {}};
  cfg.measure2 = cfg.measure1;
  cfg.sizes = {40, 60, 80};
  cfg.n_samples = 4;
  const ExperimentReport r = run_local_law_experiment(cfg);
  REQUIRE(r.stats["sizes"].size() == 3);
  for (const auto& s : r.stats["sizes"]) CHECK(s.contains("median_entrywise"));
  for (const auto& row : r.samples) CHECK(row[3] <= row[2] + 1e-15);
  cfg.sizes = {40, 60};
  CHECK_THROWS_AS(run_local_law_experiment(cfg), ConfigError);
  cfg.sizes = {40, 60, 50};
  CHECK_THROWS_AS(run_local_law_experiment(cfg), ConfigError);
}

TEST_CASE("rigidity with a deterministic spectrum") {
  ExperimentConfig cfg;
  cfg.measure1 = {"semicircle", {1.0}, {}};
  cfg.measure2 = {"point_mass", {0.0}, {}};
  cfg.theory = "limit";
  cfg.n = 200;
  cfg.top_k = 20;
  cfg.n_samples = 2;
  const ExperimentReport r = run_rigidity_experiment(cfg);
  CHECK(r.statistic <= 1.0);
  CHECK(r.pass);
}

TEST_CASE("rigidity with one index is on the fluctuation scale") {
  ExperimentConfig cfg = gue_control(200, 30);
  cfg.top_k = 1;
  const ExperimentReport r = run_rigidity_experiment(cfg);
  CHECK(std::abs(r.stats["top_offset_mean"].get<double>()) < 3.0);
  CHECK(r.statistic < 6.0);
  cfg.top_k = 201;
  CHECK_THROWS_AS(run_rigidity_experiment(cfg), ConfigError);
}

TEST_CASE("paired flow comparison runs and reports a KS distance") {
  ExperimentConfig cfg;
  cfg.measure1 = {"uniform", {-1.0, 1.0}, {}};
  cfg.measure2 = cfg.measure1;
  cfg.n = 60;
  cfg.n_samples = 50;
  const ExperimentReport r = run_dbm_comparison(cfg);
  CHECK(r.statistic >= 0.0);
  CHECK(r.statistic <= 1.0);
  CHECK(r.pass == (r.statistic <= r.threshold));
  CHECK(r.samples.size() == 50);
  CHECK(std::abs(r.stats["t0"].get<double>() - std::pow(60.0, -1.0 / 3.0 + 0.1)) < 1e-15);
}

TEST_CASE("checked edge rejects nothing on good inputs") {
  const EdgeReport e = checked_edge(Measure::uniform(-1.0, 1.0), Measure::semicircle(1.0), 0.2);
  CHECK(e.residual <= 1e-9);
  CHECK(e.gamma > 0.0);
}

TEST_CASE("io formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("command defaults") {
  const RunConfig tw = resolve_config({{"command", "verify-tw"}});
  CHECK(tw.experiment.measure1.tag == "point_mass");
  CHECK(tw.experiment.t == 1.0);
  CHECK(tw.experiment.n == 400);
  CHECK(tw.experiment.n_samples == 2000);
  const RunConfig dbm = resolve_config({{"command", "verify-dbm"}});
  CHECK(dbm.experiment.n == 300);
  CHECK(dbm.experiment.ks_threshold == 0.08);
  const RunConfig ll = resolve_config({{"command", "verify-local-law"}});
  CHECK(ll.experiment.sizes == std::vector<std::size_t>{250, 500, 1000});
  CHECK(ll.experiment.n_samples == 20);
  const RunConfig rg = resolve_config({{"command", "verify-rigidity"}});
  CHECK(rg.experiment.n == 1000);
  CHECK(rg.experiment.top_k == 100);
}

TEST_CASE("overrides and flattening") {
  const nlohmann::json nested = {{"command", "edge"}, {"measure1", {{"tag", "uniform"}}}, {"t", 0.5}};
  const nlohmann::json flat = flatten(nested);
  CHECK(flat.contains("measure1.tag"));
  const RunConfig rc = resolve_config(flat);
  CHECK(rc.experiment.measure1.tag == "uniform");
  CHECK(rc.experiment.measure1.params == std::vector<double>{-1.0, 1.0});
  CHECK(rc.experiment.t == 0.5);
}

TEST_CASE("parse_value") {
  const ConfigKey arr{"eta", KeyType::number_array, ""};
  CHECK(parse_value(arr, "1e-3, 5e-4") == nlohmann::json::array({1e-3, 5e-4}));
  const ConfigKey ints{"sizes", KeyType::integer_array, ""};
  CHECK(parse_value(ints, "10,20,30") == nlohmann::json::array({10, 20, 30}));
  const ConfigKey num{"t", KeyType::number, ""};
  CHECK_THROWS_AS(parse_value(num, "abc"), ConfigError);
  CHECK_THROWS_AS(parse_value(num, "1.5x"), ConfigError);
  const ConfigKey in{"n", KeyType::integer, ""};
  CHECK_THROWS_AS(parse_value(in, "2.5"), ConfigError);
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(resolve_config({{"command", "verify-tw"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"command", "fly"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(nlohmann::json::object()), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"command", "verify-tw"}, {"n_samples", 0}}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"command", "verify-tw"}, {"n", "big"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"command", "verify-dbm"}, {"chi", 0.5}}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"command", "convolve"}, {"eta", {1e-4, 1e-3}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"command", "edge"}, {"measure1.tag", "atoms"}}), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("usage lists every command and key") {
  const std::string u = usage_text();
  for (const auto& [name, help] : commands()) CHECK(u.find(name) != std::string::npos);
  for (const auto& k : config_keys()) CHECK(u.find(k.name) != std::string::npos);
  CHECK(commands().size() == 9);
}

}  // TEST_SUITE
