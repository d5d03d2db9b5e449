#include "fpedge/edge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fpedge/error.hpp"
#include "fpedge/subordination.hpp"

namespace fpedge {
namespace {

struct RealF {
  double f = 0.0;
  double d1 = 0.0;
};

RealF real_f(const Measure& mu, double t, double x) {
  const StieltjesJet s = stieltjes_jet(mu, cplx(x, 0.0), 1);
  const double m = s.m.real();
  const double d = s.d1.real();
  return {-1.0 / m + t * m, d / (m * m) + t * d};
}

// Smallest representable offset that keeps x strictly to the right of sup.
double just_above(double sup) {
  const double eps = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(sup));
  return sup + eps;
}

// w with F(w) = y on (sup, inf); F is increasing there.
std::optional<double> invert_f(const Measure& mu, double t, double sup, double y) {
  const double lo0 = just_above(sup);
  if (real_f(mu, t, lo0).f >= y) return std::nullopt;
  double lo = lo0;
  double d = 1.0;
  double hi = sup + d;
  while (real_f(mu, t, hi).f < y) {
    lo = hi;
    d *= 2.0;
    hi = sup + d;
    if (d > 1e12) throw BracketNotFound("edge: cannot invert F on the real axis");
  }
  const double scale = std::max(1.0, std::abs(hi));
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const RealF fx = real_f(mu, t, x);
    const double r = fx.f - y;
    if (r == 0.0) return x;
    if (r < 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * scale) break;
    double next = x - r / fx.d1;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= std::numeric_limits<double>::epsilon() * scale) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

struct BranchPoint {
  bool valid = false;
  double w1 = 0.0;
  double w2 = 0.0;
  double e = 0.0;
  double s = 0.0;
};

BranchPoint branch_at(const Measure& mu1, const Measure& mu2, double t, double sup2, double w1) {
  BranchPoint p;
  p.w1 = w1;
  const RealF f1 = real_f(mu1, t, w1);
  const auto w2 = invert_f(mu2, t, sup2, f1.f);
  if (!w2) return p;
  const RealF f2 = real_f(mu2, t, *w2);
  p.valid = true;
  p.w2 = *w2;
  p.e = w1 + *w2 - f1.f;
  p.s = (f1.d1 - 1.0) * (f2.d1 - 1.0) - 1.0;
  return p;
}

bool good(const BranchPoint& p) { return p.valid && p.s < 0.0; }

}  // namespace

std::string to_string(EdgeMethod m) {
  switch (m) {
    case EdgeMethod::stability_root:
      return "stability_root";
    case EdgeMethod::xi_equation:
      return "xi_equation";
    case EdgeMethod::support_boundary:
      return "support_boundary";
  }
  return "unknown";
}

EdgeReport find_edge_stability(const Measure& mu1, const Measure& mu2, double t, const EdgeOptions& opt) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("find_edge_stability: t must be nonnegative");
  if (!(opt.tol >= 1e-12)) throw DomainError("find_edge_stability: tolerance below 1e-12");
  const double sup1 = mu1.support().upper;
  const double sup2 = mu2.support().upper;
  const double e_hi = sup1 + sup2 + 2.0 * std::sqrt(t) + 1.0;

  const SubordinationSolution start = solve_real({mu1, mu2, t, cplx(e_hi, 0.0)});
  BranchPoint upper = branch_at(mu1, mu2, t, sup2, start.omega1.real());
  if (!good(upper)) throw BracketNotFound("find_edge_stability: no stable real branch beyond the support bound");

  // Scan toward sup1 until the branch turns unstable or ends.
  const double d = upper.w1 - sup1;
  const double floor_w = just_above(sup1);
  std::optional<BranchPoint> lower;
  for (int k = 1; k < 200; ++k) {
    const double w = sup1 + d * std::ldexp(1.0, -k);
    if (w <= floor_w) break;
    const BranchPoint p = branch_at(mu1, mu2, t, sup2, w);
    if (!good(p)) {
      lower = p;
      break;
    }
    upper = p;
  }

  EdgeReport r;
  BranchPoint edge = upper;
  r.method = EdgeMethod::support_boundary;
  if (lower) {
    double lo = lower->w1;
    double hi = upper.w1;
    BranchPoint bad = *lower;
    for (int it = 0; it < 300; ++it) {
      if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) break;
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const BranchPoint p = branch_at(mu1, mu2, t, sup2, mid);
      if (good(p)) {
        upper = p;
        hi = mid;
      } else {
        bad = p;
        lo = mid;
      }
    }
    edge = upper;
    if (bad.valid) {
      r.method = EdgeMethod::stability_root;
      if (std::abs(bad.s) < std::abs(upper.s) && bad.w1 > sup1) edge = bad;
    }
  } else {
    const BranchPoint p = branch_at(mu1, mu2, t, sup2, floor_w);
    if (p.valid) edge = p;
  }

  r.e_plus = edge.e;
  r.omega1_edge = edge.w1;
  r.omega2_edge = edge.w2;
  r.residual = std::abs(edge.s);
  if (t > 0.0) r.xi = r.e_plus + t * stieltjes(mu1, cplx(edge.w1, 0.0)).real();
  if (opt.compute_gamma) {
    r.gamma = t > 0.0 ? gamma_from_xi(mu1, mu2, t, r) : gamma_from_density_fit(mu1, mu2, t, r.e_plus);
    r.scaled_edge = r.gamma * r.e_plus;
  }
  return r;
}

double solve_xi(const Measure& mu0, double t, double tol) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("solve_xi: t must be positive");
  const double sup = mu0.support().upper;
  const double target = 1.0 / t;
  auto md = [&](double x) { return stieltjes_derivative(mu0, cplx(x, 0.0), 1).real(); };
  double lo = just_above(sup);
  if (md(lo) <= target) throw BracketNotFound("solve_xi: no root above the support");
  double d = 1.0;
  double hi = sup + d;
  while (md(hi) > target) {
    lo = hi;
    d *= 2.0;
    if (d > 1e6) throw BracketNotFound("solve_xi: search window exceeded");
    hi = sup + d;
  }
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (md(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

XiEdge edge_from_xi(const Measure& mu0, double t) {
  XiEdge out;
  out.xi = solve_xi(mu0, t);
  const StieltjesJet j = stieltjes_jet(mu0, cplx(out.xi, 0.0), 2);
  out.e_plus = out.xi - t * j.m.real();
  out.gamma = std::cbrt(-2.0 / (t * t * t * j.d2.real()));
  return out;
}

double gamma_from_density_fit(const Measure& mu1, const Measure& mu2, double t, double e_plus) {
  const std::vector<double> kappa{2.5e-3, 5e-3, 1e-2};
  std::vector<double> grid;
  for (auto it = kappa.rbegin(); it != kappa.rend(); ++it) grid.push_back(e_plus - *it);
  const auto pts = density(mu1, mu2, t, grid, {1e-7, 5e-8});
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = -rmin;
  double sk = 0.0, sr = 0.0, skk = 0.0, skr = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].ok) throw NonConvergence("gamma_from_density_fit: density evaluation failed", 0, 0.0);
    const double k = e_plus - pts[i].energy;
    const double ratio = pts[i].rho / std::sqrt(k);
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
    sk += k;
    sr += ratio;
    skk += k * k;
    skr += k * ratio;
  }
  const double n = static_cast<double>(pts.size());
  const double rmean = sr / n;
  if (!(rmean > 0.0) || (rmax - rmin) > 0.2 * rmean)
    throw FitUnstable("gamma_from_density_fit: rho / sqrt(kappa) is not stable near the edge");
  // rho / sqrt(kappa) = c + a kappa, intercept by least squares.
  const double c = (sr * skk - sk * skr) / (n * skk - sk * sk);
  if (!(c > 0.0)) throw FitUnstable("gamma_from_density_fit: nonpositive edge amplitude");
  return std::pow(std::numbers::pi * c, 2.0 / 3.0);
}

double gamma_from_xi(const Measure& mu1, const Measure& mu2, double t, const EdgeReport& edge) {
  if (!(t > 0.0)) throw DomainError("gamma_from_xi: t must be positive");
  const double m = stieltjes(mu1, cplx(edge.omega1_edge, 0.0)).real();
  const double xi = edge.e_plus + t * m;
  SolverOptions o;
  o.warm_start = cplx(edge.omega2_edge, 0.0);
  SubordinationSolution s;
  try {
    s = solve_real({mu1, mu2, 0.0, cplx(xi, 0.0)}, o);
  } catch (const DomainError&) {
    s = solve_real({mu1, mu2, 0.0, cplx(xi, 0.0)});
  }
  const SubordinationDerivatives dd = derivatives(mu1, mu2, 0.0, s);
  const double m2 = dd.m_d2.real();
  if (!(m2 < 0.0)) throw Degenerate("gamma_from_xi: m0'' is not negative at xi");
  return std::cbrt(-2.0 / (t * t * t * m2));
}

std::vector<double> classical_locations(const Measure& mu1, const Measure& mu2, double t, std::size_t n,
                                        std::size_t top_k, const EdgeReport& edge) {
  if (n == 0 || top_k == 0 || top_k > n) throw DomainError("classical_locations: need 1 <= top_k <= n");
  const double lower = mu1.support().lower + mu2.support().lower - 2.0 * std::sqrt(t);
  const double e_plus = edge.e_plus;
  if (!(e_plus > lower)) throw Degenerate("classical_locations: empty support interval");

  // x = e_plus - v^2 turns the square-root edge into a smooth integrand in v.
  constexpr std::size_t panels = 4000;
  const double vmax = std::sqrt(e_plus - lower);
  const double h = vmax / static_cast<double>(panels);
  std::vector<double> v(panels + 1);
  for (std::size_t i = 0; i <= panels; ++i) v[i] = h * static_cast<double>(i);

  std::vector<double> grid;
  grid.reserve(panels);
  for (std::size_t i = panels; i >= 1; --i) grid.push_back(e_plus - v[i] * v[i]);
  const auto pts = density(mu1, mu2, t, grid, {1e-8, 5e-9});
  std::vector<double> g(panels + 1, 0.0);
  for (std::size_t i = 1; i <= panels; ++i) {
    const DensityPoint& p = pts[panels - i];
    if (!p.ok) throw NonConvergence("classical_locations: density evaluation failed", p.iterations, p.residual);
    g[i] = 2.0 * v[i] * p.rho;
  }
  std::vector<double> cum(panels + 1, 0.0);
  for (std::size_t i = 0; i < panels; ++i) cum[i + 1] = cum[i] + 0.5 * h * (g[i] + g[i + 1]);
  const double total = cum.back();
  if (!(total > 0.0)) throw Degenerate("classical_locations: density integrates to zero");

  std::vector<double> out;
  out.reserve(top_k);
  std::size_t i = 0;
  for (std::size_t j = 1; j <= top_k; ++j) {
    const double p = (static_cast<double>(j) - 0.5) / static_cast<double>(n) * total;
    while (i + 1 < panels && cum[i + 1] < p) ++i;
    // cum(v_i + u) = cum_i + g_i u + (g_{i+1} - g_i) u^2 / (2h)
    const double a = 0.5 * (g[i + 1] - g[i]) / h;
    const double b = g[i];
    const double c = cum[i] - p;
    double u;
    if (std::abs(a) * h < 1e-14 * std::max(b, 1e-300)) {
      u = b > 0.0 ? -c / b : 0.0;
    } else {
      const double disc = std::max(b * b - 4.0 * a * c, 0.0);
      u = (-2.0 * c) / (b + std::sqrt(disc));
    }
    u = std::clamp(u, 0.0, h);
    const double vv = v[i] + u;
    out.push_back(e_plus - vv * vv);
  }
  return out;
}

StabilityDiagnostics stability_diagnostics(const Measure& mu1, const Measure& mu2, double t, cplx z,
                                           const EdgeReport& edge) {
  cplx w1, w2;
  if (z.imag() == 0.0 && z.real() == edge.e_plus) {
    w1 = edge.omega1_edge;
    w2 = edge.omega2_edge;
  } else {
    const SubordinationSolution s = solve_any({mu1, mu2, t, z});
    w1 = s.omega1;
    w2 = s.omega2;
  }
  const cplx a = f_transform_derivative(mu1, t, w1, 1) - 1.0;
  const cplx b = f_transform_derivative(mu2, t, w2, 1) - 1.0;
  const cplx f1dd = f_transform_derivative(mu1, t, w1, 2);
  const cplx f2dd = f_transform_derivative(mu2, t, w2, 2);
  StabilityDiagnostics d;
  d.s_value = a * b - 1.0;
  d.t_alpha = 0.5 * (f1dd * b * b + f2dd * a);
  d.t_beta = 0.5 * (f2dd * a * a + f1dd * b);
  d.kappa = std::abs(z.real() - edge.e_plus);
  return d;
}

nlohmann::json to_json(const EdgeReport& r) {
  nlohmann::json j;
  j["e_plus"] = r.e_plus;
  j["xi"] = r.xi ? nlohmann::json(*r.xi) : nlohmann::json(nullptr);
  j["gamma"] = r.gamma;
  j["omega1_edge"] = r.omega1_edge;
  j["omega2_edge"] = r.omega2_edge;
  j["scaled_edge"] = r.scaled_edge;
  j["method"] = to_string(r.method);
  j["residual"] = r.residual;
  return j;
}

}  // namespace fpedge
