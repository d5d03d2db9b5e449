#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fpedge {

using cplx = std::complex<double>;

/// Smallest closed interval containing the support.
struct SupportInfo {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
};

namespace family {

struct Semicircle {
  double variance;
  double center;
};

struct Uniform {
  double a;
  double b;
};

/// Density 1 / (pi sqrt((x - a)(b - x))) on [a, b].
struct Arcsine {
  double a;
  double b;
};

struct PointMass {
  double c;
};

/// Finitely many atoms, sorted by location.
struct Atoms {
  std::vector<double> locations;
  std::vector<double> weights;
  std::vector<double> cumulative;  // cumulative[i] = sum of weights[0..i]
};

/// Piecewise-linear density through (nodes[i], values[i]), normalized to unit mass.
struct GridDensity {
  std::vector<double> nodes;
  std::vector<double> values;
  std::vector<double> weights;     // trapezoid panel weights
  std::vector<double> cumulative;  // CDF at the nodes
};

}  // namespace family

/// Immutable probability measure on the real line with bounded support.
///
/// Copies share the underlying representation, so a Measure is cheap to pass
/// by value and safe to read from several threads at once.
class Measure {
 public:
  using Repr = std::variant<family::Semicircle, family::Uniform, family::Arcsine, family::PointMass,
                            family::Atoms, family::GridDensity>;

  static Measure semicircle(double variance, double center = 0.0);
  static Measure uniform(double a, double b);
  static Measure arcsine(double a, double b);
  static Measure point_mass(double c);
  /// Equal weights when `weights` is empty; weights are normalized otherwise.
  static Measure atoms(std::vector<double> locations, std::vector<double> weights = {});
  static Measure grid(std::vector<double> nodes, std::vector<double> values);

  /// Config-facing constructor. Tags: semicircle [variance, center?], uniform [a, b],
  /// arcsine [a, b], point_mass [c], atoms [x...] (+weights), grid [nodes...] (+values).
  static Measure from_tag(std::string_view tag, std::span<const double> params,
                          std::span<const double> extra = {});

  const Repr& repr() const { return *repr_; }
  SupportInfo support() const;
  double cdf(double x) const;
  double mean() const;
  bool is_discrete() const;
  std::string describe() const;

 private:
  explicit Measure(Repr repr);
  std::shared_ptr<const Repr> repr_;
};

/// The Stieltjes transform and its first derivatives at one point.
struct StieltjesJet {
  cplx m{};
  cplx d1{};
  cplx d2{};
  cplx d3{};
};

/// m(z) = \int (x - z)^{-1} dmu(x), defined for im z > 0 and for real z off the support.
cplx stieltjes(const Measure& mu, cplx z);

/// k-th derivative of m for k in {1, 2, 3}.
cplx stieltjes_derivative(const Measure& mu, cplx z, int k);

/// m and derivatives up to `order` (0..3); higher entries are left zero.
StieltjesJet stieltjes_jet(const Measure& mu, cplx z, int order);

/// Points x_i with CDF(x_i) = (i - 1/2) / n (generalized inverse for atoms), ascending.
std::vector<double> quantiles(const Measure& mu, std::size_t n);

/// Levy distance evaluated on a uniform grid over the joint support padded by 1.
/// Accurate to about the grid spacing.
double levy_distance(const Measure& a, const Measure& b, std::size_t grid_points = 100000);

}  // namespace fpedge
