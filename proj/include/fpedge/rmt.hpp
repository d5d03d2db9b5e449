#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpedge/measure.hpp"
#include "fpedge/random.hpp"

namespace fpedge {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// H_t = diag(a) + U diag(b) U* + sqrt(t) W with Haar U and GUE W.
struct EnsembleSpec {
  std::size_t n = 0;
  std::vector<double> a_diag;
  std::vector<double> b_diag;
  double t = 0.0;
  std::uint64_t seed = 0;
};

void validate(const EnsembleSpec& spec);

struct SpectrumSample {
  std::vector<double> eigenvalues;  // descending
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double t = 0.0;
};

/// QR of a complex Ginibre matrix with the columns of Q rotated by the phases of diag(R).
CMatrix sample_haar_unitary(std::size_t n, Rng& rng);

/// Hermitian, diagonal N(0, 1/n), off-diagonal complex with E|W_ij|^2 = 1/n.
CMatrix sample_gue(std::size_t n, Rng& rng);

/// One draw of the random ingredients. U is skipped when b = 0, W when t = 0.
struct Realization {
  CMatrix u;
  CMatrix w;
};

Realization draw_realization(const EnsembleSpec& spec, Rng& rng);

/// U diag(b) U*.
CMatrix conjugate_diagonal(const CMatrix& u, const std::vector<double>& b);

/// diag(a) + b_tilde + sqrt(t) W, where an empty b_tilde or W counts as zero.
CMatrix assemble_matrix(const std::vector<double>& a, const CMatrix& b_tilde, const CMatrix& w, double t);

/// Eigenvalues of a Hermitian matrix in descending order. Throws EigensolverError.
std::vector<double> hermitian_eigenvalues_desc(const CMatrix& h, std::uint64_t seed = 0, std::uint64_t stream = 0);

/// Spectrum of H_t for sample `stream` of spec.seed.
SpectrumSample assemble(const EnsembleSpec& spec, std::uint64_t stream = 0);

/// Largest eigenvalue of an n x n GUE (E|W_ij|^2 = 1/n) from the tridiagonal
/// beta = 2 model, by Sturm-count bisection.
double sample_gue_largest_eigenvalue(std::size_t n, Rng& rng);

struct ResolventProbe {
  cplx z{};
  std::vector<cplx> g_diag;
  cplx trace_g{};
  cplx trace_bg{};
  cplx trace_bgb{};
  cplx upsilon{};
  cplx omega_a_c{};
};

/// G = (H - z)^{-1} by dense LU; traces are normalized by 1/N.
ResolventProbe resolvent_probe(const CMatrix& h, const CMatrix& b_tilde, double t, cplx z);

struct DecompositionParts {
  std::size_t index = 0;
  double theta = 0.0;
  CVector h_vec;
  CVector r_vec;
  double ell = 0.0;
  CMatrix u_reduced;
};

/// U<i> = -e^{-i theta} R U with R = I - r r*, r = ell (e_i + h), h = e^{-i theta} U e_i.
DecompositionParts partial_decomposition(const CMatrix& u, std::size_t i);

/// R = I - r r*.
CMatrix householder_matrix(const CVector& r);

/// Columns sample_index, seed, lambda_1 .. lambda_k.
void write_spectra_csv(const std::string& path, const std::vector<SpectrumSample>& samples, std::size_t k);

}  // namespace fpedge
