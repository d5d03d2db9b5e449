#include "fpedge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <thread>

#include "fpedge/error.hpp"
#include "fpedge/io.hpp"
#include "fpedge/subordination.hpp"
#include "fpedge/tracywidom.hpp"

namespace fpedge {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double edge_scale(std::size_t n) { return std::pow(static_cast<double>(n), 2.0 / 3.0); }

nlohmann::json ecdf_grid(const std::vector<double>& x, const TWEvaluator& ev) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  nlohmann::json grid = nlohmann::json::array();
  for (int k = 0; k <= 32; ++k) {
    const double s = -5.0 + 0.25 * k;
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), s) - sorted.begin();
    grid.push_back({{"s", s},
                    {"empirical", static_cast<double>(below) / static_cast<double>(sorted.size())},
                    {"tw2", tw2_cdf(ev, s)}});
  }
  return grid;
}

std::uint64_t stream_id(std::size_t block, std::size_t i) {
  return (static_cast<std::uint64_t>(block) << 32) | static_cast<std::uint64_t>(i);
}

}  // namespace

Measure MeasureSpec::build() const { return Measure::from_tag(tag, params, extra); }

nlohmann::json MeasureSpec::to_json() const {
  return {{"tag", tag}, {"params", params}, {"extra", extra}};
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"measure1", measure1.to_json()},
          {"measure2", measure2.to_json()},
          {"t", t},
          {"n", n},
          {"sizes", sizes},
          {"n_samples", n_samples},
          {"seed", seed},
          {"ks_threshold", ks_threshold},
          {"eta_exponent", eta_exponent},
          {"chi", chi},
          {"top_k", top_k},
          {"rigidity_threshold", rigidity_threshold},
          {"theory", theory},
          {"tw_order", tw_order},
          {"tw_cap", tw_cap}};
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_samples < 1) throw ConfigError("n_samples must be at least 1");
  if (!(cfg.ks_threshold > 0.0 && cfg.ks_threshold < 1.0)) throw ConfigError("ks_threshold must lie in (0, 1)");
  if (!(cfg.chi > 0.0 && cfg.chi < 1.0 / 3.0)) throw ConfigError("chi must lie in (0, 1/3)");
  if (!(cfg.t >= 0.0) || !std::isfinite(cfg.t)) throw ConfigError("t must be nonnegative");
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  if (!(cfg.eta_exponent > 0.0 && cfg.eta_exponent < 1.0)) throw ConfigError("eta_exponent must lie in (0, 1)");
  if (cfg.theory != "empirical" && cfg.theory != "limit") throw ConfigError("theory must be 'empirical' or 'limit'");
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (cfg.tw_order < 20) throw ConfigError("tw.order must be at least 20");
  if (!(cfg.tw_cap >= 10.0)) throw ConfigError("tw.cap must be at least 10");
  if (!(cfg.rigidity_threshold > 0.0)) throw ConfigError("rigidity_threshold must be positive");
  for (const MeasureSpec* m : {&cfg.measure1, &cfg.measure2}) {
    try {
      (void)m->build();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("invalid measure: ") + e.what());
    }
  }
}

nlohmann::json to_json(const ExperimentReport& r) {
  const bool is_ks = r.statistic_name.rfind("ks", 0) == 0;
  return {{"tag", r.tag},
          {"config", r.config},
          {"ks", is_ks ? nlohmann::json(r.statistic) : nlohmann::json(nullptr)},
          {"statistic", r.statistic},
          {"statistic_name", r.statistic_name},
          {"threshold", r.threshold},
          {"pass", r.pass},
          {"n_samples", r.n_samples},
          {"stats", r.stats}};
}

void write_report(const ExperimentReport& r, const std::string& dir) {
  ensure_directory(dir);
  const std::filesystem::path base(dir);
  write_json((base / (r.tag + ".json")).string(), to_json(r));
  write_csv((base / (r.tag + "_samples.csv")).string(), r.sample_columns, r.samples);
}

EnsembleSpec make_ensemble(const ExperimentConfig& cfg, std::size_t n, double t) {
  EnsembleSpec spec;
  spec.n = n;
  spec.a_diag = quantiles(cfg.measure1.build(), n);
  spec.b_diag = quantiles(cfg.measure2.build(), n);
  spec.t = t;
  spec.seed = cfg.seed;
  return spec;
}

std::pair<Measure, Measure> theory_measures(const ExperimentConfig& cfg, const EnsembleSpec& spec) {
  if (cfg.theory == "limit") return {cfg.measure1.build(), cfg.measure2.build()};
  return {Measure::atoms(spec.a_diag), Measure::atoms(spec.b_diag)};
}

EdgeReport checked_edge(const Measure& mu1, const Measure& mu2, double t) {
  const EdgeReport e = find_edge_stability(mu1, mu2, t);
  if (e.method == EdgeMethod::stability_root) {
    if (e.residual > 1e-9) throw NonConvergence("edge: S residual above 1e-9", 0, e.residual);
    if (!(e.omega1_edge > mu1.support().upper) || !(e.omega2_edge > mu2.support().upper))
      throw Degenerate("edge: subordination values at the edge do not exceed the supports");
  }
  if (!(e.gamma > 0.0) || !std::isfinite(e.gamma)) throw Degenerate("edge: gamma is not positive");
  return e;
}

ExperimentReport run_tw_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = Clock::now();
  const EnsembleSpec spec = make_ensemble(cfg, cfg.n, cfg.t);
  const auto [mu1, mu2] = theory_measures(cfg, spec);
  const EdgeReport edge = checked_edge(mu1, mu2, cfg.t);
  const TWEvaluator ev(cfg.tw_order, cfg.tw_cap);
  const double scale = edge.gamma * edge_scale(cfg.n);

  std::vector<double> lambda(cfg.n_samples), x(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    const SpectrumSample s = assemble(spec, i);
    lambda[i] = s.eigenvalues.front();
    x[i] = scale * (lambda[i] - edge.e_plus);
  });

  ExperimentReport r;
  r.tag = "verify_tw";
  r.n_samples = cfg.n_samples;
  r.statistic_name = "ks_one_sample";
  r.statistic = ks_statistic(x, [&](double s) { return tw2_cdf_clamped(ev, s); });
  r.threshold = cfg.ks_threshold;
  r.pass = r.statistic <= r.threshold;
  r.config = cfg.to_json();
  r.stats = {{"edge", to_json(edge)},
             {"mean", mean_of(x)},
             {"variance", variance_of(x)},
             {"tw2_mean", tw2_mean(ev)},
             {"tw2_variance", tw2_variance(ev)},
             {"p_value", ks_pvalue(r.statistic, static_cast<double>(x.size()))},
             {"ecdf", ecdf_grid(x, ev)}};
  r.sample_columns = {"sample_index", "lambda_1", "rescaled"};
  for (std::size_t i = 0; i < x.size(); ++i) r.samples.push_back({static_cast<double>(i), lambda[i], x[i]});
  r.wall_seconds = seconds_since(t0);
  return r;
}

ExperimentReport run_local_law_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.sizes.size() < 3) throw ConfigError("local law experiment needs at least three sizes");
  for (std::size_t k = 1; k < cfg.sizes.size(); ++k)
    if (!(cfg.sizes[k] > cfg.sizes[k - 1])) throw ConfigError("sizes must increase");
  const auto t0 = Clock::now();

  ExperimentReport r;
  r.tag = "verify_local_law";
  r.n_samples = cfg.n_samples;
  r.statistic_name = "entrywise_median_ratio";
  r.threshold = 0.9;
  r.config = cfg.to_json();
  r.sample_columns = {"n", "sample_index", "entrywise", "averaged", "upsilon", "omega_gap"};
  nlohmann::json per_size = nlohmann::json::array();
  std::vector<double> entry_medians;
  bool upsilon_ok = true;
  bool omega_ok = true;

  for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
    const std::size_t n = cfg.sizes[k];
    const EnsembleSpec spec = make_ensemble(cfg, n, cfg.t);
    const auto [mu_a, mu_b] = theory_measures(cfg, spec);
    const EdgeReport edge = checked_edge(mu_a, mu_b, cfg.t);
    const double eta = std::pow(static_cast<double>(n), -cfg.eta_exponent);
    const cplx z(edge.e_plus, eta);
    const SubordinationSolution sol = solve({mu_a, mu_b, cfg.t, z});
    const cplx omega_a = sol.omega1;

    std::vector<double> entry(cfg.n_samples), avg(cfg.n_samples), ups(cfg.n_samples), gap(cfg.n_samples);
    parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
      Rng rng(spec.seed, stream_id(k + 1, i));
      const Realization real = draw_realization(spec, rng);
      const CMatrix bt = real.u.size() ? conjugate_diagonal(real.u, spec.b_diag) : CMatrix();
      const CMatrix h = assemble_matrix(spec.a_diag, bt, real.w, spec.t);
      const ResolventProbe p = resolvent_probe(h, bt, spec.t, z);
      double emax = 0.0;
      cplx esum{};
      for (std::size_t j = 0; j < n; ++j) {
        const cplx d = p.g_diag[j] - 1.0 / (spec.a_diag[j] - omega_a);
        emax = std::max(emax, std::abs(d));
        esum += d;
      }
      entry[i] = emax;
      avg[i] = std::abs(esum) / static_cast<double>(n);
      ups[i] = std::abs(p.upsilon);
      gap[i] = std::abs(p.omega_a_c - omega_a);
    });

    const double med_entry = median(entry);
    const double med_ups = median(ups);
    const double med_gap = median(gap);
    const double ups_bound = 5.0 / std::sqrt(static_cast<double>(n));
    entry_medians.push_back(med_entry);
    upsilon_ok = upsilon_ok && med_ups <= ups_bound;
    omega_ok = omega_ok && med_gap <= med_entry;
    per_size.push_back({{"n", n},
                        {"eta", eta},
                        {"e_plus", edge.e_plus},
                        {"omega_a", {omega_a.real(), omega_a.imag()}},
                        {"median_entrywise", med_entry},
                        {"median_averaged", median(avg)},
                        {"median_upsilon", med_ups},
                        {"upsilon_bound", ups_bound},
                        {"median_omega_gap", med_gap}});
    for (std::size_t i = 0; i < cfg.n_samples; ++i)
      r.samples.push_back({static_cast<double>(n), static_cast<double>(i), entry[i], avg[i], ups[i], gap[i]});
  }

  bool decreasing = true;
  for (std::size_t k = 1; k < entry_medians.size(); ++k)
    decreasing = decreasing && entry_medians[k] < entry_medians[k - 1];
  r.statistic = entry_medians.front() > 0.0 ? entry_medians.back() / entry_medians.front() : 0.0;
  r.pass = decreasing && r.statistic <= r.threshold && upsilon_ok && omega_ok;
  r.stats = {{"sizes", per_size},
             {"strictly_decreasing", decreasing},
             {"upsilon_within_bound", upsilon_ok},
             {"omega_gap_below_entrywise", omega_ok}};
  r.wall_seconds = seconds_since(t0);
  return r;
}

ExperimentReport run_rigidity_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.top_k < 1 || cfg.top_k > cfg.n) throw ConfigError("top_k must lie in [1, n]");
  const auto t0 = Clock::now();
  const EnsembleSpec spec = make_ensemble(cfg, cfg.n, cfg.t);
  const auto [mu1, mu2] = theory_measures(cfg, spec);
  const EdgeReport edge = checked_edge(mu1, mu2, cfg.t);
  const std::vector<double> classical = classical_locations(mu1, mu2, cfg.t, cfg.n, cfg.top_k, edge);
  const double scale = edge_scale(cfg.n);

  std::vector<double> stat(cfg.n_samples), top(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    const SpectrumSample s = assemble(spec, i);
    double worst = 0.0;
    for (std::size_t j = 0; j < cfg.top_k; ++j) {
      const double dev = scale * std::cbrt(static_cast<double>(j + 1)) * std::abs(s.eigenvalues[j] - classical[j]);
      worst = std::max(worst, dev);
    }
    stat[i] = worst;
    top[i] = scale * (s.eigenvalues[0] - classical[0]);
  });

  ExperimentReport r;
  r.tag = "verify_rigidity";
  r.n_samples = cfg.n_samples;
  r.statistic_name = "p95_rigidity";
  r.statistic = percentile(stat, 0.95);
  r.threshold = cfg.rigidity_threshold;
  r.pass = r.statistic <= r.threshold;
  r.config = cfg.to_json();
  r.stats = {{"edge", to_json(edge)},
             {"median", median(stat)},
             {"max", *std::max_element(stat.begin(), stat.end())},
             {"top_offset_mean", mean_of(top)},
             {"classical_head", std::vector<double>(classical.begin(),
                                                    classical.begin() + static_cast<long>(std::min<std::size_t>(10, classical.size())))}};
  r.sample_columns = {"sample_index", "rigidity", "top_offset"};
  for (std::size_t i = 0; i < stat.size(); ++i) r.samples.push_back({static_cast<double>(i), stat[i], top[i]});
  r.wall_seconds = seconds_since(t0);
  return r;
}

ExperimentReport run_dbm_comparison(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = Clock::now();
  const std::size_t n = cfg.n;
  const double flow = std::pow(static_cast<double>(n), -1.0 / 3.0 + cfg.chi);
  const EnsembleSpec spec = make_ensemble(cfg, n, cfg.t);
  const auto [mu1, mu2] = theory_measures(cfg, spec);
  const EdgeReport edge0 = checked_edge(mu1, mu2, cfg.t);
  const EdgeReport edge1 = checked_edge(mu1, mu2, cfg.t + flow);
  const double scale = edge_scale(n);

  std::vector<double> x0(cfg.n_samples), x1(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    Rng rng(spec.seed, i);
    const Realization real = draw_realization(spec, rng);
    const CMatrix w_flow = sample_gue(n, rng);
    const CMatrix bt = real.u.size() ? conjugate_diagonal(real.u, spec.b_diag) : CMatrix();
    const CMatrix h0 = assemble_matrix(spec.a_diag, bt, real.w, spec.t);
    const CMatrix h1 = h0 + std::sqrt(flow) * w_flow;
    const double l0 = hermitian_eigenvalues_desc(h0, spec.seed, i).front();
    const double l1 = hermitian_eigenvalues_desc(h1, spec.seed, i).front();
    x0[i] = edge0.gamma * scale * (l0 - edge0.e_plus);
    x1[i] = edge1.gamma * scale * (l1 - edge1.e_plus);
  });

  ExperimentReport r;
  r.tag = "verify_dbm";
  r.n_samples = cfg.n_samples;
  r.statistic_name = "ks_two_sample";
  r.statistic = ks_statistic(x0, x1);
  r.threshold = cfg.ks_threshold;
  r.pass = r.statistic <= r.threshold;
  r.config = cfg.to_json();
  r.stats = {{"t0", flow},
             {"edge_base", to_json(edge0)},
             {"edge_flow", to_json(edge1)},
             {"mean_base", mean_of(x0)},
             {"mean_flow", mean_of(x1)},
             {"variance_base", variance_of(x0)},
             {"variance_flow", variance_of(x1)},
             {"p_value", ks_pvalue(r.statistic, static_cast<double>(cfg.n_samples) / 2.0)}};
  r.sample_columns = {"sample_index", "rescaled_base", "rescaled_flow"};
  for (std::size_t i = 0; i < x0.size(); ++i) r.samples.push_back({static_cast<double>(i), x0[i], x1[i]});
  r.wall_seconds = seconds_since(t0);
  return r;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return std::clamp(d, 0.0, 1.0);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_pvalue(double d, double n_eff) {
  if (!(n_eff > 0.0)) throw DomainError("ks_pvalue: effective size must be positive");
  const double sn = std::sqrt(n_eff);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  for (unsigned w = 0; w < nthreads; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("percentile: empty input");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("percentile: p must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace fpedge
