#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpedge/measure.hpp"

namespace fpedge {

enum class EdgeMethod {
  stability_root,    // largest real zero of S
  xi_equation,       // edge of mu0 [+] sc(t) through xi
  support_boundary,  // S stays negative; the edge is the end of the real branch
};

std::string to_string(EdgeMethod m);

struct EdgeReport {
  double e_plus = 0.0;
  std::optional<double> xi;
  double gamma = 0.0;
  double omega1_edge = 0.0;
  double omega2_edge = 0.0;
  double scaled_edge = 0.0;
  EdgeMethod method = EdgeMethod::stability_root;
  double residual = 0.0;  // |S| at the edge
};

struct EdgeOptions {
  double tol = 1e-10;
  bool compute_gamma = true;
};

/// Upper edge of mu1 [+] mu2 [+] sc(t).
///
/// Walks the real solution branch parametrized by w1: y = F1(w1),
/// w2 = F2^{-1}(y) on (sup mu2, inf), E = w1 + w2 - y. Along the branch
/// dE/dw1 = -S / F2'(w2), so the edge is where S changes sign. Gamma comes
/// from gamma_from_density_fit for t = 0 and from gamma_from_xi for t > 0.
EdgeReport find_edge_stability(const Measure& mu1, const Measure& mu2, double t, const EdgeOptions& opt = {});

/// Rightmost xi > sup mu0 with m0'(xi) = 1/t.
double solve_xi(const Measure& mu0, double t, double tol = 1e-14);

struct XiEdge {
  double xi = 0.0;
  double e_plus = 0.0;
  double gamma = 0.0;
};

/// e_plus = xi - t m0(xi), gamma = (-t^3 m0''(xi) / 2)^{-1/3}.
XiEdge edge_from_xi(const Measure& mu0, double t);

/// gamma = (pi c)^{2/3} from a least-squares fit rho(e_plus - k) ~ c sqrt(k),
/// k in {1e-2, 5e-3, 2.5e-3}. Throws FitUnstable when rho / sqrt(k) varies by
/// more than 20% over the three points.
double gamma_from_density_fit(const Measure& mu1, const Measure& mu2, double t, double e_plus);

/// Gamma of mu1 [+] mu2 [+] sc(t), t > 0, through xi = E + t m(E) and m0''(xi)
/// of the t = 0 convolution, obtained by implicit differentiation of the
/// subordination system at real xi.
double gamma_from_xi(const Measure& mu1, const Measure& mu2, double t, const EdgeReport& edge);

/// Top `top_k` classical locations gamma_1 >= gamma_2 >= ..., where gamma_j
/// carries tail mass (j - 1/2) / n above it.
std::vector<double> classical_locations(const Measure& mu1, const Measure& mu2, double t, std::size_t n,
                                        std::size_t top_k, const EdgeReport& edge);

struct StabilityDiagnostics {
  cplx s_value{};
  cplx t_alpha{};
  cplx t_beta{};
  double kappa = 0.0;
};

/// S, T_alpha, T_beta at z. For z equal to the edge the edge omegas are used directly.
StabilityDiagnostics stability_diagnostics(const Measure& mu1, const Measure& mu2, double t, cplx z,
                                           const EdgeReport& edge);

nlohmann::json to_json(const EdgeReport& r);

}  // namespace fpedge
