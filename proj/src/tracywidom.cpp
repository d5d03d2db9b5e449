#include "fpedge/tracywidom.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/airy.hpp>

#include "fpedge/error.hpp"
#include "fpedge/io.hpp"

namespace fpedge {
namespace {

constexpr double kLo = -12.0;
constexpr double kHi = 8.0;

void check_airy(double x) {
  if (std::isnan(x)) throw DomainError("airy: NaN argument");
  if (x < -40.0) throw DomainError("airy: argument below -40");
}

// Composite Gauss-Legendre over [kLo, kHi] of f(s) * F2(s).
template <class Fn>
double integrate_cdf(const TWEvaluator& ev, Fn weight) {
  const GaussLegendre& rule = gauss_legendre_cached(16);
  constexpr int panels = 40;
  const double h = (kHi - kLo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = kLo + (p + 0.5) * h;
    for (std::size_t j = 0; j < rule.size(); ++j) {
      const double s = mid + 0.5 * h * rule.nodes[j];
      sum += 0.5 * h * rule.weights[j] * weight(s) * ev.determinant(s);
    }
  }
  return sum;
}

}  // namespace

double airy_ai(double x) {
  check_airy(x);
  if (x > 40.0) return 0.0;
  return boost::math::airy_ai(x);
}

double airy_ai_prime(double x) {
  check_airy(x);
  if (x > 40.0) return 0.0;
  return boost::math::airy_ai_prime(x);
}

TWEvaluator::TWEvaluator(int order, double cap) : order_(order), cap_(cap) {
  if (order < 20) throw DomainError("TWEvaluator: quadrature order must be at least 20");
  if (!(cap >= 10.0)) throw DomainError("TWEvaluator: domain cap must be at least 10");
  rule_ = gauss_legendre(static_cast<std::size_t>(order));
}

double TWEvaluator::determinant(double s) const {
  const int m = order_;
  std::vector<double> x(m), sw(m), ai(m), aip(m);
  for (int j = 0; j < m; ++j) {
    x[j] = s + 0.5 * cap_ * (1.0 + rule_.nodes[j]);
    sw[j] = std::sqrt(0.5 * cap_ * rule_.weights[j]);
    ai[j] = airy_ai(x[j]);
    aip[j] = airy_ai_prime(x[j]);
  }
  Eigen::MatrixXd a(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      double kern;
      if (j == k)
        kern = aip[j] * aip[j] - x[j] * ai[j] * ai[j];
      else
        kern = (ai[j] * aip[k] - aip[j] * ai[k]) / (x[j] - x[k]);
      a(j, k) = (j == k ? 1.0 : 0.0) - sw[j] * kern * sw[k];
    }
  }
  const double det = a.partialPivLu().determinant();
  return std::clamp(det, 0.0, 1.0);
}

double tw2_cdf(const TWEvaluator& ev, double s) {
  if (!(s >= kLo && s <= kHi)) throw DomainError("tw2_cdf: s outside [-12, 8]");
  return ev.determinant(s);
}

double tw2_cdf_clamped(const TWEvaluator& ev, double s) {
  if (std::isnan(s)) throw DomainError("tw2_cdf: NaN argument");
  if (s < kLo) return 0.0;
  if (s > kHi) return 1.0;
  return ev.determinant(s);
}

double tw2_quantile(const TWEvaluator& ev, double p) {
  if (!(p >= 1e-4 && p <= 1.0 - 1e-6)) throw DomainError("tw2_quantile: p outside [1e-4, 1 - 1e-6]");
  double lo = kLo;
  double hi = kHi;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (ev.determinant(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double tw2_mean(const TWEvaluator& ev) {
  return kHi * ev.determinant(kHi) - kLo * ev.determinant(kLo) - integrate_cdf(ev, [](double) { return 1.0; });
}

double tw2_variance(const TWEvaluator& ev) {
  const double mean = tw2_mean(ev);
  const double second = kHi * kHi * ev.determinant(kHi) - kLo * kLo * ev.determinant(kLo) -
                        2.0 * integrate_cdf(ev, [](double s) { return s; });
  return second - mean * mean;
}

void write_tw_table(const std::string& path, const TWEvaluator& ev, double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw DomainError("write_tw_table: need step > 0 and hi >= lo");
  std::vector<std::vector<double>> rows;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= count; ++k) {
    const double s = lo + step * static_cast<double>(k);
    rows.push_back({s, tw2_cdf(ev, s)});
  }
  write_csv(path, {"s", "F2"}, rows);
}

}  // namespace fpedge
