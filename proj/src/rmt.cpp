#include "fpedge/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fpedge/error.hpp"
#include "fpedge/io.hpp"

namespace fpedge {

void validate(const EnsembleSpec& spec) {
  if (spec.n == 0) throw DomainError("ensemble: n must be positive");
  if (spec.a_diag.size() != spec.n || spec.b_diag.size() != spec.n)
    throw DomainError("ensemble: a_diag and b_diag must have length n");
  for (std::size_t i = 0; i < spec.n; ++i)
    if (!std::isfinite(spec.a_diag[i]) || !std::isfinite(spec.b_diag[i]))
      throw DomainError("ensemble: non-finite diagonal entry");
  if (!(spec.t >= 0.0) || !std::isfinite(spec.t)) throw DomainError("ensemble: t must be nonnegative");
}

CMatrix sample_haar_unitary(std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("sample_haar_unitary: n must be positive");
  const auto N = static_cast<Eigen::Index>(n);
  CMatrix z(N, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < N; ++i) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < N; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

CMatrix sample_gue(std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("sample_gue: n must be positive");
  const auto N = static_cast<Eigen::Index>(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  CMatrix w(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    w(i, i) = rng.normal() * s;
    for (Eigen::Index j = i + 1; j < N; ++j) {
      const cplx c = rng.complex_normal() * s;
      w(i, j) = c;
      w(j, i) = std::conj(c);
    }
  }
  return w;
}

Realization draw_realization(const EnsembleSpec& spec, Rng& rng) {
  Realization r;
  const bool has_b = std::any_of(spec.b_diag.begin(), spec.b_diag.end(), [](double b) { return b != 0.0; });
  if (has_b) r.u = sample_haar_unitary(spec.n, rng);
  if (spec.t > 0.0) r.w = sample_gue(spec.n, rng);
  return r;
}

CMatrix conjugate_diagonal(const CMatrix& u, const std::vector<double>& b) {
  const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  const CMatrix ub = u * bv.cast<cplx>().asDiagonal();
  return ub * u.adjoint();
}

CMatrix assemble_matrix(const std::vector<double>& a, const CMatrix& b_tilde, const CMatrix& w, double t) {
  const auto N = static_cast<Eigen::Index>(a.size());
  CMatrix h = b_tilde.size() ? b_tilde : CMatrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) h(i, i) += a[static_cast<std::size_t>(i)];
  if (t > 0.0 && w.size()) h += std::sqrt(t) * w;
  return h;
}

std::vector<double> hermitian_eigenvalues_desc(const CMatrix& h, std::uint64_t seed, std::uint64_t stream) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigensolverError("Hermitian eigensolver failed", seed, stream);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

SpectrumSample assemble(const EnsembleSpec& spec, std::uint64_t stream) {
  validate(spec);
  Rng rng(spec.seed, stream);
  const Realization r = draw_realization(spec, rng);
  const CMatrix bt = r.u.size() ? conjugate_diagonal(r.u, spec.b_diag) : CMatrix();
  const CMatrix h = assemble_matrix(spec.a_diag, bt, r.w, spec.t);
  SpectrumSample s;
  s.eigenvalues = hermitian_eigenvalues_desc(h, spec.seed, stream);
  s.seed = spec.seed;
  s.stream = stream;
  s.t = spec.t;
  return s;
}

double sample_gue_largest_eigenvalue(std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("sample_gue_largest_eigenvalue: n must be positive");
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> d(n), e2(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) d[k] = rng.normal() * s;
  for (std::size_t k = 1; k < n; ++k) {
    std::gamma_distribution<double> gamma(static_cast<double>(n - k), 1.0);
    e2[k - 1] = gamma(rng) * s * s;
  }
  double lo = *std::max_element(d.begin(), d.end());
  double hi = -1e300;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = std::sqrt(e2[k]) + (k > 0 ? std::sqrt(e2[k - 1]) : 0.0);
    hi = std::max(hi, d[k] + r);
  }
  // Number of eigenvalues below x from the LDL^T pivots of T - x.
  auto below = [&](double x) {
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      q = d[k] - x - (k > 0 ? e2[k - 1] / q : 0.0);
      if (q == 0.0) q = -1e-300;
      if (q < 0.0) ++count;
    }
    return count;
  };
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (below(mid) == n)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

ResolventProbe resolvent_probe(const CMatrix& h, const CMatrix& b_tilde, double t, cplx z) {
  if (!(z.imag() >= 1e-10)) throw DomainError("resolvent_probe: im z must be at least 1e-10");
  const Eigen::Index N = h.rows();
  const double inv_n = 1.0 / static_cast<double>(N);
  CMatrix m = h;
  m.diagonal().array() -= z;
  const CMatrix g = m.partialPivLu().inverse();
  ResolventProbe p;
  p.z = z;
  p.g_diag.resize(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) p.g_diag[static_cast<std::size_t>(i)] = g(i, i);
  p.trace_g = g.trace() * inv_n;
  if (b_tilde.size()) {
    p.trace_bg = b_tilde.cwiseProduct(g.transpose()).sum() * inv_n;
    const CMatrix bg = b_tilde * g;
    p.trace_bgb = bg.cwiseProduct(b_tilde.transpose()).sum() * inv_n;
  }
  p.upsilon = p.trace_bg - p.trace_bg * p.trace_bg + p.trace_g * p.trace_bgb;
  p.omega_a_c = z - p.trace_bg / p.trace_g + t * p.trace_g;
  return p;
}

CMatrix householder_matrix(const CVector& r) {
  const auto n = r.size();
  return CMatrix::Identity(n, n) - r * r.adjoint();
}

DecompositionParts partial_decomposition(const CMatrix& u, std::size_t i) {
  const auto n = static_cast<std::size_t>(u.rows());
  if (u.rows() != u.cols()) throw DomainError("partial_decomposition: U must be square");
  if (i >= n) throw DomainError("partial_decomposition: index out of range");
  const auto ii = static_cast<Eigen::Index>(i);
  DecompositionParts p;
  p.index = i;
  const CVector v = u.col(ii);
  p.theta = std::arg(v(ii));
  const cplx phase = std::polar(1.0, -p.theta);
  p.h_vec = phase * v;
  CVector s = p.h_vec;
  s(ii) += 1.0;
  const double norm = s.norm();
  if (norm < 1e-8) throw Degenerate("partial_decomposition: e_i + h_i vanishes");
  p.ell = std::sqrt(2.0) / norm;
  p.r_vec = p.ell * s;
  p.u_reduced = -phase * (householder_matrix(p.r_vec) * u);
  return p;
}

void write_spectra_csv(const std::string& path, const std::vector<SpectrumSample>& samples, std::size_t k) {
  std::vector<std::string> header{"sample_index", "seed"};
  for (std::size_t j = 1; j <= k; ++j) header.push_back("lambda_" + std::to_string(j));
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : samples) {
    std::vector<std::string> row{std::to_string(s.stream), std::to_string(s.seed)};
    for (std::size_t j = 0; j < k; ++j)
      row.push_back(j < s.eigenvalues.size() ? format_double(s.eigenvalues[j]) : std::string("nan"));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace fpedge
