#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpedge/edge.hpp"
#include "fpedge/measure.hpp"
#include "fpedge/rmt.hpp"

namespace fpedge {

/// Measure description as it appears in a config file.
struct MeasureSpec {
  std::string tag = "point_mass";
  std::vector<double> params{0.0};
  std::vector<double> extra;

  Measure build() const;
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  MeasureSpec measure1;
  MeasureSpec measure2;
  double t = 0.0;
  std::size_t n = 400;
  std::vector<std::size_t> sizes{250, 500, 1000};
  std::size_t n_samples = 1000;
  std::uint64_t seed = 20240501;
  double ks_threshold = 0.05;
  double eta_exponent = 0.6;
  double chi = 0.1;
  std::size_t top_k = 100;
  double rigidity_threshold = 10.0;
  /// "empirical": theory on the atoms of A and B; "limit": on measure1, measure2.
  std::string theory = "empirical";
  unsigned workers = 1;
  int tw_order = 40;
  double tw_cap = 14.0;

  nlohmann::json to_json() const;
};

/// Throws ConfigError on invalid settings.
void validate(const ExperimentConfig& cfg);

struct ExperimentReport {
  std::string tag;
  std::size_t n_samples = 0;
  std::string statistic_name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  nlohmann::json stats;
  nlohmann::json config;
  std::vector<std::string> sample_columns;
  std::vector<std::vector<double>> samples;
  double wall_seconds = 0.0;
};

/// Report as JSON: tag, config, ks (null unless the statistic is a KS distance),
/// statistic, statistic_name, threshold, pass, n_samples, stats. Wall time is
/// left out so reruns produce identical files.
nlohmann::json to_json(const ExperimentReport& r);

/// Writes <dir>/<tag>.json and <dir>/<tag>_samples.csv.
void write_report(const ExperimentReport& r, const std::string& dir);

/// Ensemble with A, B the quantile embeddings of measure1, measure2 at size n.
EnsembleSpec make_ensemble(const ExperimentConfig& cfg, std::size_t n, double t);

/// Measures on the theory side for a given ensemble.
std::pair<Measure, Measure> theory_measures(const ExperimentConfig& cfg, const EnsembleSpec& spec);

/// Edge with the invariant checks required before sampling.
EdgeReport checked_edge(const Measure& mu1, const Measure& mu2, double t);

ExperimentReport run_tw_experiment(const ExperimentConfig& cfg);
ExperimentReport run_local_law_experiment(const ExperimentConfig& cfg);
ExperimentReport run_rigidity_experiment(const ExperimentConfig& cfg);
ExperimentReport run_dbm_comparison(const ExperimentConfig& cfg);

/// One-sample Kolmogorov-Smirnov distance against a CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov p-value for distance d at effective sample size n.
double ks_pvalue(double d, double n_eff);

/// Calls fn(i) for i in [0, count) on `workers` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Nearest-rank percentile, p in (0, 1].
double percentile(std::vector<double> values, double p);

double median(std::vector<double> values);

}  // namespace fpedge
