// Command-line front end: density sweeps, edges, Tracy-Widom tables, spectra
// and the Monte Carlo verification experiments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fpedge/config.hpp"
#include "fpedge/edge.hpp"
#include "fpedge/error.hpp"
#include "fpedge/harness.hpp"
#include "fpedge/io.hpp"
#include "fpedge/rmt.hpp"
#include "fpedge/subordination.hpp"
#include "fpedge/tracywidom.hpp"

namespace fs = std::filesystem;
using namespace fpedge;

namespace {

std::string out_path(const RunConfig& rc, const std::string& name) {
  ensure_directory(rc.output_dir);
  return (fs::path(rc.output_dir) / name).string();
}

int cmd_convolve(const RunConfig& rc) {
  const ExperimentConfig& e = rc.experiment;
  const Measure mu1 = e.measure1.build();
  const Measure mu2 = e.measure2.build();
  const double spread = 2.0 * std::sqrt(e.t);
  const double lo = rc.grid_lo.value_or(mu1.support().lower + mu2.support().lower - spread - 0.5);
  const double hi = rc.grid_hi.value_or(mu1.support().upper + mu2.support().upper + spread + 0.5);
  std::vector<double> grid(rc.grid_points);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  SolverOptions opt;
  opt.tol = rc.tol;
  opt.max_iter = rc.max_iter;
  const auto pts = density(mu1, mu2, e.t, grid, rc.eta, opt);
  write_density_csv(out_path(rc, "density.csv"), pts);

  double mass = 0.0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].ok) ++failed;
    if (i + 1 < pts.size()) mass += 0.5 * (grid[i + 1] - grid[i]) * (pts[i].rho + pts[i + 1].rho);
  }
  const EdgeReport edge = find_edge_stability(mu1, mu2, e.t);
  write_json(out_path(rc, "edge.json"), to_json(edge));
  std::printf("convolve: %zu points (%zu failed), mass %.6f, e_plus %.10f, gamma %.8f\n", pts.size(), failed,
              mass, edge.e_plus, edge.gamma);
  return failed ? 3 : 0;
}

int cmd_edge(const RunConfig& rc) {
  const ExperimentConfig& e = rc.experiment;
  const EdgeReport edge = find_edge_stability(e.measure1.build(), e.measure2.build(), e.t);
  write_json(out_path(rc, "edge.json"), to_json(edge));
  std::printf("edge: e_plus %.12f gamma %.10f method %s residual %.3g\n", edge.e_plus, edge.gamma,
              to_string(edge.method).c_str(), edge.residual);
  return 0;
}

int cmd_tabulate(const RunConfig& rc) {
  const TWEvaluator ev(rc.experiment.tw_order, rc.experiment.tw_cap);
  write_tw_table(out_path(rc, "tw2.csv"), ev, rc.tw_lo, rc.tw_hi, rc.tw_step);
  std::printf("tabulate-tw: [%g, %g] step %g written\n", rc.tw_lo, rc.tw_hi, rc.tw_step);
  return 0;
}

int cmd_sample(const RunConfig& rc) {
  const ExperimentConfig& e = rc.experiment;
  const EnsembleSpec spec = make_ensemble(e, e.n, e.t);
  std::vector<SpectrumSample> samples(e.n_samples);
  parallel_for(e.n_samples, e.workers, [&](std::size_t i) { samples[i] = assemble(spec, i); });
  write_spectra_csv(out_path(rc, "spectra.csv"), samples, std::min(rc.sample_k, e.n));
  std::printf("sample: %zu spectra of size %zu written\n", samples.size(), e.n);
  return 0;
}

int cmd_verify(const RunConfig& rc) {
  ExperimentReport r;
  if (rc.command == "verify-tw")
    r = run_tw_experiment(rc.experiment);
  else if (rc.command == "verify-local-law")
    r = run_local_law_experiment(rc.experiment);
  else if (rc.command == "verify-rigidity")
    r = run_rigidity_experiment(rc.experiment);
  else
    r = run_dbm_comparison(rc.experiment);
  write_report(r, rc.output_dir);
  std::printf("%s %s %s=%.6g threshold=%.6g samples=%zu (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.tag.c_str(),
              r.statistic_name.c_str(), r.statistic, r.threshold, r.n_samples, r.wall_seconds);
  return r.pass ? 0 : 1;
}

int cmd_decompose(const RunConfig& rc) {
  const std::size_t n = rc.decompose_n;
  double worst_square = 0.0, worst_recon = 0.0, worst_frame = 0.0, worst_swap = 0.0;
  for (std::size_t p = 0; p < rc.decompose_pairs; ++p) {
    Rng rng(rc.experiment.seed, p);
    const CMatrix u = sample_haar_unitary(n, rng);
    const std::size_t i = rng() % n;
    const DecompositionParts d = partial_decomposition(u, i);
    const CMatrix R = householder_matrix(d.r_vec);
    const auto N = static_cast<Eigen::Index>(n);
    const auto ii = static_cast<Eigen::Index>(i);
    const CMatrix eye = CMatrix::Identity(N, N);
    worst_square = std::max(worst_square, (R * R - eye).cwiseAbs().maxCoeff());
    worst_recon = std::max(worst_recon, (-std::polar(1.0, d.theta) * (R * d.u_reduced) - u).cwiseAbs().maxCoeff());
    worst_frame = std::max({worst_frame, (d.u_reduced.row(ii) - eye.row(ii)).cwiseAbs().maxCoeff(),
                            (d.u_reduced.col(ii) - eye.col(ii)).cwiseAbs().maxCoeff()});
    worst_swap = std::max({worst_swap, (R * eye.col(ii) + d.h_vec).cwiseAbs().maxCoeff(),
                           (R * d.h_vec + eye.col(ii)).cwiseAbs().maxCoeff()});
  }
  const double worst = std::max({worst_square, worst_recon, worst_frame, worst_swap});
  const bool pass = worst <= 1e-10;
  write_json(out_path(rc, "decompose_check.json"), {{"n", n},
                                                    {"pairs", rc.decompose_pairs},
                                                    {"seed", rc.experiment.seed},
                                                    {"householder_square", worst_square},
                                                    {"reconstruction", worst_recon},
                                                    {"row_column", worst_frame},
                                                    {"reflection_swap", worst_swap},
                                                    {"pass", pass}});
  std::printf("%s decompose_check max_error=%.3g pairs=%zu\n", pass ? "PASS" : "FAIL", worst, rc.decompose_pairs);
  return pass ? 0 : 1;
}

int dispatch(const RunConfig& rc) {
  const std::string& c = rc.command;
  if (c == "convolve") return cmd_convolve(rc);
  if (c == "edge") return cmd_edge(rc);
  if (c == "tabulate-tw") return cmd_tabulate(rc);
  if (c == "sample") return cmd_sample(rc);
  if (c == "decompose-check") return cmd_decompose(rc);
  return cmd_verify(rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpedge: free additive convolution edges and random-matrix edge statistics"};
  app.footer(usage_text());
  std::string command;
  std::string config_path;
  app.add_option("command", command, "command to run (see below)");
  app.add_option("-c,--config", config_path, "JSON config file with flat or nested keys");
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> flags;
  for (const auto& key : config_keys()) {
    if (key.name == "command") continue;
    flags[key.name] = app.add_option("--" + key.name, raw[key.name], key.help);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    nlohmann::json flat = config_path.empty() ? nlohmann::json::object() : load_config_file(config_path);
    if (!command.empty()) flat["command"] = command;
    for (const auto& key : config_keys()) {
      auto it = flags.find(key.name);
      if (it != flags.end() && it->second->count() > 0) flat[key.name] = parse_value(key, raw[key.name]);
    }
    const RunConfig rc = resolve_config(flat);
    return dispatch(rc);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
