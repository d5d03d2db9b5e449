#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "fpedge/error.hpp"
#include "fpedge/harness.hpp"
#include "fpedge/random.hpp"
#include "fpedge/rmt.hpp"
#include "fpedge/subordination.hpp"
#include "fpedge/tracywidom.hpp"
#include "oracles.hpp"

using namespace fpedge;
using oracle::cplx;

namespace {

std::vector<double> balanced_signs(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i < n / 2 ? -1.0 : 1.0;
  return v;
}

}  // namespace

TEST_SUITE("rmt") {

TEST_CASE("Philox known answer") {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differ_c = differ_c || x != c();
    differ_d = differ_d || x != d();
  }
  CHECK(differ_c);
  CHECK(differ_d);
  Rng r(1, 0);
  double m = 0.0, v = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK((u > 0.0 && u < 1.0));
    m += u / n;
    v += (u - 0.5) * (u - 0.5) / n;
  }
  CHECK(std::abs(m - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(v - 1.0 / 12.0) < 1e-3);
}

TEST_CASE("Haar unitary basics") {
  Rng rng(11, 0);
  const CMatrix u1 = sample_haar_unitary(1, rng);
  CHECK(std::abs(std::abs(u1(0, 0)) - 1.0) < 1e-14);
  for (int s = 0; s < 5; ++s) {
    const CMatrix u = sample_haar_unitary(64, rng);
    CHECK((u * u.adjoint() - CMatrix::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(sample_haar_unitary(0, rng), DomainError);
}

TEST_CASE("Haar trace moments") {
  const int samples = 1000;
  cplx mean = 0.0;
  double second = 0.0;
  double diag_phase = 0.0;
  for (int s = 0; s < samples; ++s) {
    Rng rng(12, static_cast<std::uint64_t>(s));
    const CMatrix u = sample_haar_unitary(64, rng);
    const cplx tr = u.trace();
    mean += tr / static_cast<double>(samples);
    second += std::norm(tr) / samples;
    diag_phase += std::arg(u(0, 0)) / samples;
  }
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(samples));
  // E|Tr U|^2 = 1 with Var|Tr U|^2 = 1.
  CHECK(std::abs(second - 1.0) <= 4.0 / std::sqrt(samples));
  // Without the phase fix arg U_11 concentrates; with it, it is uniform on (-pi, pi].
  CHECK(std::abs(diag_phase) <= 4.0 * 1.8138 / std::sqrt(samples));
}

TEST_CASE("GUE construction") {
  Rng rng(13, 0);
  const std::size_t n = 1000;
  const CMatrix w = sample_gue(n, rng);
  CHECK(w == w.adjoint());
  double sum = 0.0, sum2 = 0.0, dsum2 = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    dsum2 += w(i, i).real() * w(i, i).real();
    for (Eigen::Index j = i + 1; j < static_cast<Eigen::Index>(n); ++j) {
      const double a = std::norm(w(i, j));
      sum += a;
      sum2 += a * a;
      ++count;
    }
  }
  const double mean = sum / count;
  const double se = std::sqrt((sum2 / count - mean * mean) / count);
  CHECK(std::abs(mean - 1.0 / n) <= 3.0 * se);
  CHECK(std::abs(dsum2 / n - 1.0 / n) <= 4.0 * std::sqrt(2.0 / n) / n);
}

TEST_CASE("GUE largest eigenvalue mean") {
  const std::size_t n = 400;
  const int samples = 300;
  double mean = 0.0;
  for (int s = 0; s < samples; ++s) {
    Rng rng(14, static_cast<std::uint64_t>(s));
    mean += hermitian_eigenvalues_desc(sample_gue(n, rng))[0] / samples;
  }
  const double expect = 2.0 + oracle::tw2_mean * std::pow(static_cast<double>(n), -2.0 / 3.0);
  CHECK(std::abs(mean - expect) <= 0.004);
}

TEST_CASE("tridiagonal sampler matches the dense GUE") {
  const std::size_t n = 60;
  const int samples = 600;
  std::vector<double> dense(samples), tri(samples);
  for (int s = 0; s < samples; ++s) {
    Rng r1(15, static_cast<std::uint64_t>(s));
    dense[s] = hermitian_eigenvalues_desc(sample_gue(n, r1))[0];
    Rng r2(16, static_cast<std::uint64_t>(s));
    tri[s] = sample_gue_largest_eigenvalue(n, r2);
  }
  CHECK(ks_pvalue(ks_statistic(dense, tri), samples / 2.0) > 0.01);
  Rng r(17, 0);
  const double x = sample_gue_largest_eigenvalue(1, r);
  CHECK(std::isfinite(x));
}

TEST_CASE("deterministic spectra") {
  EnsembleSpec spec;
  spec.n = 50;
  spec.a_diag.resize(50);
  spec.b_diag.assign(50, 0.0);
  for (std::size_t i = 0; i < 50; ++i) spec.a_diag[i] = std::sin(3.0 * i);
  auto sorted = spec.a_diag;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  CHECK(assemble(spec).eigenvalues == sorted);

  std::swap(spec.a_diag, spec.b_diag);
  const auto ev = assemble(spec).eigenvalues;
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(ev[i] - sorted[i]) < 1e-10);

  spec.n = 0;
  CHECK_THROWS_AS(assemble(spec), DomainError);
}

TEST_CASE("reproducibility and spectrum bounds") {
  ExperimentConfig cfg;
  cfg.measure1 = {"uniform", {-1.0, 1.0}, {}};
  cfg.measure2 = {"arcsine", {-0.5, 1.0}, {}};
  const EnsembleSpec spec = make_ensemble(cfg, 120, 0.4);
  const auto a = assemble(spec, 3).eigenvalues;
  CHECK(a == assemble(spec, 3).eigenvalues);
  CHECK(a != assemble(spec, 4).eigenvalues);
  const double bound = *std::max_element(spec.a_diag.begin(), spec.a_diag.end()) +
                       *std::max_element(spec.b_diag.begin(), spec.b_diag.end()) + 2.0 * std::sqrt(0.4) + 0.5;
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(assemble(spec, s).eigenvalues[0] <= bound);
}

TEST_CASE("Bernoulli pair gives the arcsine law") {
  const std::size_t n = 1000;
  EnsembleSpec spec;
  spec.n = n;
  spec.a_diag = balanced_signs(n);
  spec.b_diag = balanced_signs(n);
  spec.seed = 99;
  auto ev = assemble(spec).eigenvalues;
  std::sort(ev.begin(), ev.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = oracle::arcsine_cdf(ev[i], -2.0, 2.0);
    sup = std::max({sup, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  CHECK(sup <= 0.03);
}

TEST_CASE("resolvent probe") {
  const std::vector<double> a{-1.0, 0.25, 0.5, 2.0};
  const CMatrix h = assemble_matrix(a, CMatrix(), CMatrix(), 0.0);
  const cplx z(0.3, 0.2);
  const ResolventProbe p = resolvent_probe(h, CMatrix(), 0.0, z);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(p.g_diag[i] - 1.0 / (a[i] - z)) < 1e-15);
  CHECK_THROWS_AS(resolvent_probe(h, CMatrix(), 0.0, {0.3, 0.0}), DomainError);

  ExperimentConfig cfg;
  cfg.measure1 = {"uniform", {-1.0, 1.0}, {}};
  cfg.measure2 = cfg.measure1;
  const EnsembleSpec spec = make_ensemble(cfg, 200, 0.3);
  Rng rng(spec.seed, 0);
  const Realization r = draw_realization(spec, rng);
  const CMatrix bt = conjugate_diagonal(r.u, spec.b_diag);
  const CMatrix hh = assemble_matrix(spec.a_diag, bt, r.w, spec.t);
  const auto ev = hermitian_eigenvalues_desc(hh);
  for (cplx w : {cplx(0.1, 0.05), cplx(1.8, 0.5), cplx(-0.7, 1e-3)}) {
    const ResolventProbe q = resolvent_probe(hh, bt, spec.t, w);
    CHECK(q.trace_g.imag() > 0.0);
    cplx tr = 0.0;
    for (double l : ev) tr += 1.0 / (l - w);
    tr /= static_cast<double>(ev.size());
    CHECK(std::abs(tr - q.trace_g) < 1e-9);
  }
}

TEST_CASE("omega from the resolvent matches the solver") {
  ExperimentConfig cfg;
  cfg.measure1 = {"uniform", {-1.0, 1.0}, {}};
  cfg.measure2 = cfg.measure1;
  const std::size_t n = 1000;
  const EnsembleSpec spec = make_ensemble(cfg, n, 0.0);
  const auto [ma, mb] = theory_measures(cfg, spec);
  const EdgeReport edge = checked_edge(ma, mb, 0.0);
  const cplx z(edge.e_plus, std::pow(static_cast<double>(n), -0.6));
  const SubordinationSolution s = solve({ma, mb, 0.0, z});
  Rng rng(spec.seed, 0);
  const Realization r = draw_realization(spec, rng);
  const CMatrix bt = conjugate_diagonal(r.u, spec.b_diag);
  const ResolventProbe p = resolvent_probe(assemble_matrix(spec.a_diag, bt, r.w, 0.0), bt, 0.0, z);
  CHECK(std::abs(p.omega_a_c - s.omega1) <= 0.05);
}

TEST_CASE("partial decomposition identities") {
  const std::size_t n = 64;
  const CMatrix eye = CMatrix::Identity(n, n);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(21, s);
    const CMatrix u = sample_haar_unitary(n, rng);
    const std::size_t i = s * 7 % n;
    const auto ii = static_cast<Eigen::Index>(i);
    const DecompositionParts d = partial_decomposition(u, i);
    const CMatrix R = householder_matrix(d.r_vec);
    CHECK((R * R - eye).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((-std::polar(1.0, d.theta) * (R * d.u_reduced) - u).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d.u_reduced.row(ii) - eye.row(ii)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d.u_reduced.col(ii) - eye.col(ii)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((R * eye.col(ii) + d.h_vec).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((R * d.h_vec + eye.col(ii)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(d.h_vec.norm() - 1.0) < 1e-12);
  }
  Rng rng(22, 0);
  CHECK_THROWS_AS(partial_decomposition(sample_haar_unitary(4, rng), 4), DomainError);
}

TEST_CASE("Haar invariance under a fixed permutation") {
  const std::size_t n = 30;
  const int samples = 500;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::cos(1.0 + i);
    b[i] = i % 3 == 0 ? 1.0 : -0.5;
  }
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) perm.indices()[static_cast<Eigen::Index>(i)] = static_cast<int>((i * 7 + 3) % n);
  std::vector<double> x(samples), y(samples);
  for (int s = 0; s < samples; ++s) {
    Rng r1(31, static_cast<std::uint64_t>(s));
    const CMatrix u = sample_haar_unitary(n, r1);
    x[s] = hermitian_eigenvalues_desc(assemble_matrix(a, conjugate_diagonal(u, b), CMatrix(), 0.0))[0];
    Rng r2(32, static_cast<std::uint64_t>(s));
    const CMatrix pu = perm * sample_haar_unitary(n, r2);
    y[s] = hermitian_eigenvalues_desc(assemble_matrix(a, conjugate_diagonal(pu, b), CMatrix(), 0.0))[0];
  }
  CHECK(ks_pvalue(ks_statistic(x, y), samples / 2.0) >= 0.01);
}

TEST_CASE("eigenvalue residuals") {
  Rng rng(41, 0);
  const CMatrix h = sample_gue(80, rng);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const double scale = h.norm();
  for (Eigen::Index k = 0; k < 80; k += 9)
    CHECK((h * es.eigenvectors().col(k) - es.eigenvalues()(k) * es.eigenvectors().col(k)).norm() <= 1e-9 * scale);
  const auto ev = hermitian_eigenvalues_desc(h);
  CHECK(std::abs(ev[0] - es.eigenvalues()(79)) < 1e-12);
  const EigensolverError e("x", 5, 6);
  CHECK(e.seed() == 5);
  CHECK(e.stream() == 6);
}

TEST_CASE("spectra CSV") {
  const auto dir = std::filesystem::temp_directory_path() / "fpedge_rmt_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "spectra.csv").string();
  SpectrumSample s;
  s.eigenvalues = {0.1, -2.0};
  s.seed = 9;
  s.stream = 1;
  write_spectra_csv(path, {s}, 2);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "sample_index,seed,lambda_1,lambda_2");
  CHECK(row == "1,9,0.10000000000000001,-2");
}

}  // TEST_SUITE
