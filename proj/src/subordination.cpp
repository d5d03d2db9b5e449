#include "fpedge/subordination.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fpedge/error.hpp"
#include "fpedge/io.hpp"

namespace fpedge {
namespace {

struct FJet {
  cplx f{};
  cplx d1{};
  cplx d2{};
};

FJet f_jet(const Measure& mu, double t, cplx z, int order) {
  const StieltjesJet s = stieltjes_jet(mu, z, order);
  if (s.m == cplx{}) throw DomainError("f_transform: Stieltjes transform vanishes");
  FJet j;
  const cplx inv = 1.0 / s.m;
  j.f = -inv + t * s.m;
  if (order >= 1) j.d1 = s.d1 * inv * inv + t * s.d1;
  if (order >= 2) j.d2 = s.d2 * inv * inv - 2.0 * s.d1 * s.d1 * inv * inv * inv + t * s.d2;
  return j;
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time t must be finite and nonnegative");
}

// One evaluation of the scalar equation g(w2) = z + h1(z + h2(w2)) - w2 = 0.
struct Step {
  cplx w1{};
  cplx w2{};
  cplx g{};
  cplx s{};  // dg/dw2
  double res = 0.0;
};

Step evaluate(const SubordinationQuery& q, cplx w2) {
  const FJet j2 = f_jet(q.mu2, q.t, w2, 1);
  Step st;
  st.w2 = w2;
  st.w1 = q.z + j2.f - w2;
  const FJet j1 = f_jet(q.mu1, q.t, st.w1, 1);
  st.g = q.z + j1.f - st.w1 - w2;
  st.s = (j1.d1 - 1.0) * (j2.d1 - 1.0) - 1.0;
  st.res = std::abs(st.g);
  return st;
}

SubordinationSolution finish(const SubordinationQuery& q, const Step& st, int iterations, bool converged) {
  SubordinationSolution sol;
  sol.omega1 = st.w1;
  sol.omega2 = st.w2;
  const StieltjesJet jet = stieltjes_jet(q.mu1, st.w1, 0);
  sol.m = jet.m;
  sol.f_value = -1.0 / jet.m + q.t * jet.m;
  sol.residual = st.res;
  sol.iterations = iterations;
  sol.converged = converged;
  return sol;
}

}  // namespace

cplx f_transform(const Measure& mu, double t, cplx z) { return f_jet(mu, t, z, 0).f; }

cplx f_transform_derivative(const Measure& mu, double t, cplx z, int k) {
  if (k != 1 && k != 2) throw DomainError("f_transform_derivative: order must be 1 or 2");
  const FJet j = f_jet(mu, t, z, k);
  return k == 1 ? j.d1 : j.d2;
}

SubordinationSolution solve(const SubordinationQuery& q, const SolverOptions& opt) {
  check_time(q.t);
  if (!(q.z.imag() > 0.0)) throw DomainError("solve: need im z > 0 (use solve_real on the real axis)");
  if (!(opt.tol >= 1e-14)) throw DomainError("solve: tolerance below 1e-14");
  const double scale = std::max(1.0, std::abs(q.z));
  const double target = opt.tol * scale;
  const double floor_im = q.z.imag() - 1e-10;

  cplx start = opt.warm_start.value_or(q.z + cplx(0.0, scale));
  if (!(start.imag() > 0.0)) start = q.z + cplx(0.0, scale);
  Step cur = evaluate(q, start);

  double lambda = 1.0;
  double mark_res = cur.res;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (cur.res <= target) return finish(q, cur, it, true);

    const cplx newton = cur.w2 - cur.g / cur.s;
    if (std::isfinite(newton.real()) && std::isfinite(newton.imag()) && newton.imag() >= floor_im &&
        newton.imag() > 0.0) {
      try {
        const Step cand = evaluate(q, newton);
        if (cand.res < cur.res && cand.w1.imag() >= floor_im) {
          cur = cand;
          continue;
        }
      } catch (const DomainError&) {
      }
    }

    const cplx next = cur.w2 + lambda * cur.g;
    if (next.imag() < -1e-8) throw DomainError("solve: iterate left the upper half-plane");
    cur = evaluate(q, cplx(next.real(), std::max(next.imag(), q.z.imag())));
    if ((it + 1) % 50 == 0) {
      if (cur.res > 0.999 * mark_res) lambda = 0.5;
      mark_res = cur.res;
    }
  }
  if (cur.res <= target) return finish(q, cur, it, true);
  throw NonConvergence("subordination solve did not converge", it, cur.res);
}

SubordinationSolution solve_real(const SubordinationQuery& q, const SolverOptions& opt) {
  check_time(q.t);
  if (q.z.imag() != 0.0) throw DomainError("solve_real: z must be real");
  if (!(opt.tol >= 1e-14)) throw DomainError("solve_real: tolerance below 1e-14");
  const double z = q.z.real();
  const double sup1 = q.mu1.support().upper;
  const double sup2 = q.mu2.support().upper;
  const double target = opt.tol * std::max(1.0, std::abs(z));

  double w2;
  if (opt.warm_start) {
    w2 = opt.warm_start->real();
  } else {
    SubordinationQuery cq = q;
    cq.z = cplx(z, 1e-6);
    w2 = solve(cq, opt).omega2.real();
  }

  auto eval_real = [&](double x) -> std::optional<Step> {
    if (!(x > sup2)) return std::nullopt;
    const FJet j2 = f_jet(q.mu2, q.t, cplx(x, 0.0), 1);
    const double w1 = z + j2.f.real() - x;
    if (!(w1 > sup1)) return std::nullopt;
    const FJet j1 = f_jet(q.mu1, q.t, cplx(w1, 0.0), 1);
    Step st;
    st.w1 = w1;
    st.w2 = x;
    st.g = z + j1.f.real() - w1 - x;
    st.s = (j1.d1.real() - 1.0) * (j2.d1.real() - 1.0) - 1.0;
    st.res = std::abs(st.g.real());
    return st;
  };

  std::optional<Step> cur = eval_real(w2);
  if (!cur) throw DomainError("solve_real: seed lies outside the real branch beyond the edge");
  const int max_newton = std::min(opt.max_iter, 500);
  int it = 0;
  for (; it < max_newton && cur->res > target; ++it) {
    const double step = -cur->g.real() / cur->s.real();
    bool accepted = false;
    for (double lam = 1.0; lam > 1e-14; lam *= 0.5) {
      const auto cand = eval_real(w2 + lam * step);
      if (cand && cand->res < cur->res) {
        cur = cand;
        w2 = cand->w2.real();
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (cur->res > target) throw NonConvergence("real subordination solve did not converge", it, cur->res);
  if (!(cur->s.real() < 0.0))
    throw DomainError("solve_real: z = " + format_double(z) + " is not beyond the upper edge");
  return finish(q, *cur, it, true);
}

SubordinationSolution solve_any(const SubordinationQuery& q, const SolverOptions& opt) {
  return q.z.imag() == 0.0 ? solve_real(q, opt) : solve(q, opt);
}

cplx stability_value(const Measure& mu1, const Measure& mu2, double t, const SubordinationSolution& s) {
  const cplx a = f_transform_derivative(mu1, t, s.omega1, 1) - 1.0;
  const cplx b = f_transform_derivative(mu2, t, s.omega2, 1) - 1.0;
  return a * b - 1.0;
}

SubordinationDerivatives derivatives(const Measure& mu1, const Measure& mu2, double t,
                                     const SubordinationSolution& s) {
  const FJet j1 = f_jet(mu1, t, s.omega1, 2);
  const FJet j2 = f_jet(mu2, t, s.omega2, 2);
  const StieltjesJet m1 = stieltjes_jet(mu1, s.omega1, 2);
  const cplx a = j1.d1 - 1.0;
  const cplx b = j2.d1 - 1.0;
  const cplx det = a * b - 1.0;
  if (det == cplx{}) throw Degenerate("derivatives: singular linearization at the edge");
  SubordinationDerivatives d;
  d.omega1_d1 = -(1.0 + b) / det;
  d.omega2_d1 = -(1.0 + a) / det;
  const cplx r1 = -j1.d2 * d.omega1_d1 * d.omega1_d1;
  const cplx r2 = -j2.d2 * d.omega2_d1 * d.omega2_d1;
  // [a -1; -1 b] [w1''; w2''] = [r1; r2]
  d.omega1_d2 = (b * r1 + r2) / det;
  d.omega2_d2 = (r1 + a * r2) / det;
  d.m_d1 = m1.d1 * d.omega1_d1;
  d.m_d2 = m1.d2 * d.omega1_d1 * d.omega1_d1 + m1.d1 * d.omega1_d2;
  return d;
}

std::vector<DensityPoint> density(const Measure& mu1, const Measure& mu2, double t,
                                  const std::vector<double>& grid, const std::vector<double>& eta_seq,
                                  const SolverOptions& opt) {
  check_time(t);
  if (eta_seq.empty()) throw DomainError("density: empty eta sequence");
  for (std::size_t k = 0; k < eta_seq.size(); ++k) {
    if (!(eta_seq[k] > 0.0)) throw DomainError("density: eta values must be positive");
    if (k > 0 && !(eta_seq[k] < eta_seq[k - 1])) throw DomainError("density: eta sequence must decrease");
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw DomainError("density: grid must be sorted");

  const std::size_t ne = eta_seq.size();
  std::vector<std::optional<cplx>> warm(ne);
  std::vector<DensityPoint> out;
  out.reserve(grid.size());
  std::vector<double> rho(ne);
  for (double e : grid) {
    DensityPoint p;
    p.energy = e;
    p.ok = true;
    for (std::size_t k = 0; k < ne; ++k) {
      SolverOptions o = opt;
      o.warm_start = warm[k];
      try {
        const SubordinationSolution s = solve({mu1, mu2, t, cplx(e, eta_seq[k])}, o);
        rho[k] = s.m.imag() / std::numbers::pi;
        p.residual = std::max(p.residual, s.residual);
        p.iterations += s.iterations;
        warm[k] = s.omega2;
      } catch (const Error&) {
        p.ok = false;
        warm[k].reset();
      }
    }
    if (p.ok) {
      if (ne == 1) {
        p.rho = rho[0];
      } else {
        // Least-squares line in eta, evaluated at eta = 0.
        double mx = 0.0, my = 0.0;
        for (std::size_t k = 0; k < ne; ++k) {
          mx += eta_seq[k];
          my += rho[k];
        }
        mx /= static_cast<double>(ne);
        my /= static_cast<double>(ne);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t k = 0; k < ne; ++k) {
          sxy += (eta_seq[k] - mx) * (rho[k] - my);
          sxx += (eta_seq[k] - mx) * (eta_seq[k] - mx);
        }
        p.rho = my - (sxy / sxx) * mx;
      }
      p.rho = std::max(p.rho, 0.0);
    }
    out.push_back(p);
  }
  return out;
}

void write_density_csv(const std::string& path, const std::vector<DensityPoint>& points) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(points.size());
  for (const auto& p : points) {
    rows.push_back({format_double(p.energy), format_double(p.ok ? p.rho : std::nan("")),
                    format_double(p.residual), std::to_string(p.iterations)});
  }
  write_csv(path, {"E", "rho", "residual", "iterations"}, rows);
}

}  // namespace fpedge
