#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fpedge/measure.hpp"

namespace fpedge {

struct SubordinationQuery {
  Measure mu1;
  Measure mu2;
  double t = 0.0;
  cplx z{};
};

struct SubordinationSolution {
  cplx omega1{};
  cplx omega2{};
  cplx m{};
  cplx f_value{};
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 100000;
  /// Starting value for omega2; the default start is z + i max(1, |z|).
  std::optional<cplx> warm_start;
};

/// F_{mu,t}(z) = -1/m(z) + t m(z).
cplx f_transform(const Measure& mu, double t, cplx z);

/// First (k = 1) or second (k = 2) derivative of F_{mu,t}.
cplx f_transform_derivative(const Measure& mu, double t, cplx z, int k);

/// Solves F1(w1) = F2(w2) = w1 + w2 - z for im z > 0.
///
/// Iterates w2 -> z + h1(z + h2(w2)) with h_j(w) = F_j(w) - w, switching to
/// damped steps when the residual stalls, and finishes with Newton steps on
/// the same scalar equation. Convergence means residual <= tol * max(1, |z|).
/// Throws NonConvergence after max_iter steps.
SubordinationSolution solve(const SubordinationQuery& q, const SolverOptions& opt = {});

/// Real solution for real z to the right of the upper edge. The returned
/// omegas exceed the upper support endpoints and S(z) < 0. Without a seed the
/// iteration starts from the complex solution at z + 1e-6 i.
SubordinationSolution solve_real(const SubordinationQuery& q, const SolverOptions& opt = {});

/// Dispatches to solve or solve_real depending on im z.
SubordinationSolution solve_any(const SubordinationQuery& q, const SolverOptions& opt = {});

/// S = (F1'(w1) - 1)(F2'(w2) - 1) - 1 at a solution.
cplx stability_value(const Measure& mu1, const Measure& mu2, double t, const SubordinationSolution& s);

/// z-derivatives of the subordination functions and of m at a solution.
struct SubordinationDerivatives {
  cplx omega1_d1{};
  cplx omega2_d1{};
  cplx omega1_d2{};
  cplx omega2_d2{};
  cplx m_d1{};
  cplx m_d2{};
};

SubordinationDerivatives derivatives(const Measure& mu1, const Measure& mu2, double t,
                                     const SubordinationSolution& s);

struct DensityPoint {
  double energy = 0.0;
  double rho = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool ok = false;
};

/// Density of mu1 [+] mu2 [+] sc(t) by Stieltjes inversion: pi^{-1} im m(E + i eta)
/// for each eta, extrapolated linearly in eta to zero. Negative values are clipped.
/// Points whose solve fails are returned with ok = false and rho = 0.
std::vector<DensityPoint> density(const Measure& mu1, const Measure& mu2, double t,
                                  const std::vector<double>& grid, const std::vector<double>& eta_seq,
                                  const SolverOptions& opt = {});

/// Columns E, rho, residual, iterations.
void write_density_csv(const std::string& path, const std::vector<DensityPoint>& points);

}  // namespace fpedge
