#pragma once

#include <string>

#include "fpedge/quadrature.hpp"

namespace fpedge {

/// Airy function Ai. Returns 0 for x > 40 and throws DomainError for x < -40.
double airy_ai(double x);
double airy_ai_prime(double x);

/// Nystrom discretization of the Airy-kernel Fredholm determinant on (s, s + cap].
class TWEvaluator {
 public:
  explicit TWEvaluator(int order = 40, double cap = 14.0);

  int order() const { return order_; }
  double cap() const { return cap_; }

  /// det(I - K_Ai) on (s, s + cap], clamped to [0, 1]. No range check on s.
  double determinant(double s) const;

 private:
  int order_;
  double cap_;
  GaussLegendre rule_;
};

/// GUE Tracy-Widom CDF, s in [-12, 8].
double tw2_cdf(const TWEvaluator& ev, double s);

/// As tw2_cdf but 0 below -12 and 1 above 8.
double tw2_cdf_clamped(const TWEvaluator& ev, double s);

/// Inverse CDF for p in [1e-4, 1 - 1e-6], bisection to 1e-8 in s.
double tw2_quantile(const TWEvaluator& ev, double p);

/// Mean and variance by integrating the CDF over [-12, 8].
double tw2_mean(const TWEvaluator& ev);
double tw2_variance(const TWEvaluator& ev);

/// Columns s, F2 for s = lo, lo + step, ..., <= hi.
void write_tw_table(const std::string& path, const TWEvaluator& ev, double lo, double hi, double step);

}  // namespace fpedge
