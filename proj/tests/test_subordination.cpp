#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fpedge/error.hpp"
#include "fpedge/harness.hpp"
#include "fpedge/rmt.hpp"
#include "fpedge/subordination.hpp"
#include "oracles.hpp"

using namespace fpedge;
using oracle::cplx;

namespace {

const Measure sc1 = Measure::semicircle(1.0);
const Measure unif = Measure::uniform(-1.0, 1.0);

std::vector<cplx> sweep() {
  std::vector<cplx> z;
  for (double re : {-3.0, -1.5, -0.4, 0.0, 0.9, 1.6, 2.8})
    for (double im : {0.02, 0.3, 1.5}) z.emplace_back(re, im);
  return z;
}

}  // namespace

TEST_SUITE("subordination") {

TEST_CASE("F transform values") {
  CHECK(std::abs(f_transform(sc1, 1.0, 10.0 / 3.0) - 8.0 / 3.0) < 1e-12);
  for (cplx z : {cplx(0.0, 1.0), cplx(2.0, 0.1), cplx(-4.0, 3.0)})
    CHECK(std::abs(f_transform(Measure::point_mass(0.4), 0.0, z) - (z - 0.4)) < 1e-12);
  const cplx big(0.0, 1e4);
  for (const Measure& mu : {sc1, unif, Measure::semicircle(1.0, 0.3), Measure::point_mass(0.7),
                            Measure::atoms({0.0, 1.0, 5.0})})
    CHECK(std::abs(f_transform(mu, 0.0, big) - (big - mu.mean())) < 1e-2);
}

TEST_CASE("F transform derivatives") {
  CHECK(std::abs(f_transform_derivative(sc1, 0.0, 3.0 * std::sqrt(2.0) / 2.0, 1) - 2.0) < 1e-12);
  CHECK(std::abs(f_transform_derivative(Measure::point_mass(-0.2), 0.0, {0.3, 0.8}, 1) - 1.0) < 1e-12);
  for (const Measure& mu : {sc1, unif, Measure::arcsine(-1.0, 2.0), Measure::atoms({-1.0, 0.5})})
    for (double t : {0.0, 0.7})
      for (cplx z : {cplx(0.1, 0.4), cplx(-1.3, 0.2), cplx(3.0, 1.0)}) {
        auto f = [&](cplx w) { return f_transform(mu, t, w); };
        auto f1 = [&](cplx w) { return f_transform_derivative(mu, t, w, 1); };
        const cplx d1 = f_transform_derivative(mu, t, z, 1);
        const cplx d2 = f_transform_derivative(mu, t, z, 2);
        CHECK(std::abs(d1 - oracle::derivative(f, z, 1e-4)) <= 1e-6 * std::abs(d1));
        CHECK(std::abs(d2 - oracle::derivative(f1, z, 1e-4)) <= 1e-6 * std::abs(d2) + 1e-9);
      }
  CHECK_THROWS_AS(f_transform_derivative(sc1, 0.0, {0.0, 1.0}, 3), DomainError);
}

TEST_CASE("semicircle closed forms on the real axis") {
  const auto s = solve_any({sc1, sc1, 0.0, 3.0});
  CHECK(std::abs(s.omega1 - 2.5) < 1e-10);
  CHECK(std::abs(s.omega2 - 2.5) < 1e-10);
  CHECK(std::abs(s.m + 0.5) < 1e-10);
  CHECK(s.residual < 1e-12);
  const auto s1 = solve_any({sc1, sc1, 1.0, 4.0});
  CHECK(std::abs(s1.omega1 - 10.0 / 3.0) < 1e-10);
  CHECK(std::abs(s1.m + 1.0 / 3.0) < 1e-10);
}

TEST_CASE("shift by a point mass") {
  const cplx z(0.0, 2.0);
  const auto s = solve({sc1, Measure::point_mass(0.5), 0.0, z});
  CHECK(std::abs(s.omega1 - (z - 0.5)) < 1e-10);
  CHECK(std::abs(s.m - oracle::sc_stieltjes(z - 0.5)) < 1e-10);
}

TEST_CASE("semicircle self-convolution along a contour") {
  for (cplx z : sweep()) {
    const auto s = solve({sc1, sc1, 0.0, z});
    CHECK(std::abs(s.m - oracle::sc_stieltjes(z, 2.0)) < 1e-10);
    const auto s1 = solve({sc1, Measure::point_mass(0.0), 1.0, z});
    CHECK(std::abs(s1.m - oracle::sc_stieltjes(z, 2.0)) < 1e-10);
  }
}

TEST_CASE("half-plane, symmetry and Pick property") {
  const Measure a = Measure::atoms({-1.0, -0.2, 0.4, 1.1});
  for (cplx z : sweep()) {
    const auto s = solve({unif, a, 0.3, z});
    CHECK(s.converged);
    CHECK(s.omega1.imag() >= z.imag() - 1e-10);
    CHECK(s.omega2.imag() >= z.imag() - 1e-10);
    CHECK(std::abs(s.f_value - (s.omega1 + s.omega2 - z)) <= 1e-10 * std::max(1.0, std::abs(z)));
    const auto r = solve({a, unif, 0.3, z});
    CHECK(std::abs(r.omega1 - s.omega2) < 1e-10);
    CHECK(std::abs(r.omega2 - s.omega1) < 1e-10);
    CHECK(std::abs(r.m - s.m) < 1e-10);
    for (const Measure& mu : {unif, a, sc1})
      for (double t : {0.0, 0.5}) CHECK(f_transform(mu, t, z).imag() >= z.imag() - 1e-12);
  }
}

TEST_CASE("time routes agree") {
  for (const auto& [a, b] : {std::pair{unif, unif}, std::pair{sc1, unif}})
    for (cplx z : {cplx(0.3, 0.5), cplx(1.9, 0.05), cplx(-2.2, 0.2)})
      for (double t : {0.25, 1.0}) {
        const auto st = solve({a, b, t, z});
        const auto s0 = solve({a, b, 0.0, z + t * st.m});
        CHECK(std::abs(st.omega1 - s0.omega1) < 1e-8);
        CHECK(std::abs(st.m - s0.m) < 1e-8);
      }
}

TEST_CASE("solver errors") {
  CHECK_THROWS_AS(solve({sc1, sc1, 0.0, {0.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(solve({sc1, sc1, 0.0, {0.0, -1.0}}), DomainError);
  SolverOptions tight;
  tight.tol = 1e-16;
  CHECK_THROWS_AS(solve({sc1, sc1, 0.0, {0.0, 1.0}}, tight), DomainError);
  SolverOptions short_run;
  short_run.max_iter = 1;
  CHECK_THROWS_AS(solve({unif, unif, 0.0, {1.54, 1e-6}}, short_run), NonConvergence);
  CHECK_THROWS_AS(solve({sc1, sc1, -1.0, {0.0, 1.0}}), DomainError);
  CHECK_THROWS_AS(solve_real({sc1, sc1, 0.0, 2.5}), Error);
}

TEST_CASE("real solutions beyond the edge") {
  for (double e : {2.9, 3.5, 6.0}) {
    const auto s = solve_real({sc1, sc1, 0.0, e});
    CHECK(s.omega1.real() > 2.0);
    CHECK(stability_value(sc1, sc1, 0.0, s).real() < 0.0);
    CHECK(std::abs(s.m - oracle::sc_stieltjes(e, 2.0)) < 1e-10);
  }
}

TEST_CASE("z-derivatives match finite differences") {
  for (cplx z : {cplx(0.4, 0.3), cplx(1.4, 0.1)}) {
    const SubordinationQuery q{unif, sc1, 0.2, z};
    const auto s = solve(q);
    const auto d = derivatives(unif, sc1, 0.2, s);
    auto w1 = [&](cplx w) { return solve({unif, sc1, 0.2, w}).omega1; };
    auto mm = [&](cplx w) { return solve({unif, sc1, 0.2, w}).m; };
    CHECK(std::abs(d.omega1_d1 - oracle::derivative(w1, z, 1e-3)) < 1e-6 * std::abs(d.omega1_d1));
    CHECK(std::abs(d.m_d1 - oracle::derivative(mm, z, 1e-3)) < 1e-6 * std::abs(d.m_d1));
  }
}

TEST_CASE("density values") {
  SolverOptions opt;
  const std::vector<double> eta{1e-3, 5e-4};
  const auto p = density(sc1, sc1, 0.0, {0.0, 1.0, 5.0}, eta, opt);
  CHECK(std::abs(p[0].rho - 1.0 / (std::numbers::pi * std::sqrt(2.0))) < 1e-5);
  CHECK(std::abs(p[1].rho - oracle::sc_density(1.0, 2.0)) < 1e-5);
  CHECK(p[2].rho < 1e-8);
  for (const auto& x : p) CHECK(x.ok);
  CHECK_THROWS_AS(density(sc1, sc1, 0.0, {0.0}, {}, opt), DomainError);
  CHECK_THROWS_AS(density(sc1, sc1, 0.0, {0.0}, {1e-4, 1e-3}, opt), DomainError);
}

TEST_CASE("density integrates to one") {
  std::vector<double> grid;
  for (double x = -2.2; x <= 2.2 + 1e-12; x += 2e-3) grid.push_back(x);
  const auto p = density(unif, unif, 0.0, grid, {1e-4, 5e-5});
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) mass += 0.5 * (grid[i + 1] - grid[i]) * (p[i].rho + p[i + 1].rho);
  CHECK(mass >= 0.99);
  CHECK(mass <= 1.001);
}

TEST_CASE("density does not depend on how the grid is split") {
  const std::vector<double> all{0.0, 0.5, 1.0, 1.4, 1.5};
  const auto whole = density(unif, unif, 0.0, all, {1e-4, 5e-5});
  const auto a = density(unif, unif, 0.0, {0.0, 0.5}, {1e-4, 5e-5});
  const auto b = density(unif, unif, 0.0, {1.0, 1.4, 1.5}, {1e-4, 5e-5});
  CHECK(std::abs(whole[1].rho - a[1].rho) < 1e-9);
  CHECK(std::abs(whole[3].rho - b[1].rho) < 1e-9);
}

TEST_CASE("uniform pair density against a matrix histogram") {
  // Bulk eigenvalue counts are rigid, so two samples at N = 2000 suffice.
  ExperimentConfig cfg;
  cfg.measure1 = {"uniform", {-1.0, 1.0}, {}};
  cfg.measure2 = cfg.measure1;
  const std::size_t n = 2000;
  const EnsembleSpec spec = make_ensemble(cfg, n, 0.0);
  std::size_t count = 0;
  const double half = 0.1;
  const int samples = 2;
  for (int s = 0; s < samples; ++s)
    for (double l : assemble(spec, static_cast<std::uint64_t>(s)).eigenvalues)
      if (std::abs(l) <= half) ++count;
  const double hist = static_cast<double>(count) / (samples * n * 2.0 * half);
  const auto p = density(unif, unif, 0.0, {0.0}, {1e-4, 5e-5});
  CHECK(std::abs(hist - p[0].rho) < 0.01);
}

}  // TEST_SUITE
