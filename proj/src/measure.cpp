#include "fpedge/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fpedge/error.hpp"
#include "fpedge/quadrature.hpp"

namespace fpedge {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// log(1 + d) without losing the small-|d| digits.
cplx clog1p(cplx d) {
  const double re = 0.5 * std::log1p(2.0 * d.real() + std::norm(d));
  const double im = std::atan2(d.imag(), 1.0 + d.real());
  return {re, im};
}

// log((b - z) / (a - z)) on the principal branch of the ratio.
cplx log_ratio(double a, double b, cplx z) {
  const cplx d = (b - a) / (a - z);
  if (z.imag() == 0.0) return {std::log1p(d.real()), 0.0};
  return clog1p(d);
}

StieltjesJet semicircle_jet(const family::Semicircle& f, cplx z, int order) {
  const double sigma = std::sqrt(f.variance);
  const cplx w = z - f.center;
  // Product of principal roots picks the branch with s ~ w at infinity.
  const cplx s = std::sqrt(w - 2.0 * sigma) * std::sqrt(w + 2.0 * sigma);
  StieltjesJet jet;
  jet.m = -2.0 / (w + s);
  if (order >= 1) jet.d1 = 2.0 / (s * (w + s));
  if (order >= 2) jet.d2 = -2.0 / (s * s * s);
  if (order >= 3) jet.d3 = 6.0 * w / std::pow(s, 5);
  return jet;
}

StieltjesJet uniform_jet(const family::Uniform& f, cplx z, int order) {
  const cplx A = f.a - z;
  const cplx B = f.b - z;
  StieltjesJet jet;
  jet.m = log_ratio(f.a, f.b, z) / (f.b - f.a);
  if (order >= 1) jet.d1 = 1.0 / (A * B);
  if (order >= 2) jet.d2 = (A + B) / (A * A * B * B);
  if (order >= 3) jet.d3 = 2.0 * (A * A + A * B + B * B) / (A * A * A * B * B * B);
  return jet;
}

StieltjesJet point_mass_jet(double c, cplx z, int order) {
  const cplx q = 1.0 / (c - z);
  StieltjesJet jet;
  jet.m = q;
  if (order >= 1) jet.d1 = q * q;
  if (order >= 2) jet.d2 = 2.0 * q * q * q;
  if (order >= 3) jet.d3 = 6.0 * q * q * q * q;
  return jet;
}

StieltjesJet atoms_jet(const family::Atoms& f, cplx z, int order) {
  cplx s0{}, s1{}, s2{}, s3{};
  const std::size_t n = f.locations.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx q = 1.0 / (f.locations[i] - z);
    const cplx wq = f.weights[i] * q;
    s0 += wq;
    if (order >= 1) {
      const cplx wq2 = wq * q;
      s1 += wq2;
      if (order >= 2) {
        const cplx wq3 = wq2 * q;
        s2 += wq3;
        if (order >= 3) s3 += wq3 * q;
      }
    }
  }
  return {s0, s1, 2.0 * s2, 6.0 * s3};
}

// Arcsine law through x = c + r cos(theta), which turns dmu into dtheta / pi.
// Panels are graded geometrically toward the real part of the complex pole
// in the theta plane.
StieltjesJet arcsine_jet(const family::Arcsine& f, cplx z, int order) {
  const double c = 0.5 * (f.a + f.b);
  const double r = 0.5 * (f.b - f.a);
  const cplx pole = std::acos((z - c) / r);
  const double center = std::clamp(pole.real(), 0.0, kPi);
  const double dist = std::max(std::abs(pole.imag()), 1e-15);

  std::vector<double> breaks{0.0, kPi};
  if (dist > 0.5) {
    for (int i = 1; i < 8; ++i) breaks.push_back(kPi * i / 8.0);
  } else {
    for (double w = dist; w < kPi; w *= 2.0) {
      if (center - w > 0.0) breaks.push_back(center - w);
      if (center + w < kPi) breaks.push_back(center + w);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const GaussLegendre& rule = gauss_legendre_cached(64);
  cplx s0{}, s1{}, s2{}, s3{};
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    for (std::size_t j = 0; j < rule.size(); ++j) {
      const double theta = mid + half * rule.nodes[j];
      const double w = half * rule.weights[j];
      const cplx q = 1.0 / (c + r * std::cos(theta) - z);
      s0 += w * q;
      if (order >= 1) s1 += w * q * q;
      if (order >= 2) s2 += w * q * q * q;
      if (order >= 3) s3 += w * q * q * q * q;
    }
  }
  return {s0 / kPi, s1 / kPi, 2.0 * s2 / kPi, 6.0 * s3 / kPi};
}

// Exact transform of a piecewise-linear density, panel by panel.
StieltjesJet grid_jet(const family::GridDensity& f, cplx z, int order) {
  StieltjesJet jet;
  const std::size_t n = f.nodes.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x0 = f.nodes[i];
    const double x1 = f.nodes[i + 1];
    if (f.values[i] == 0.0 && f.values[i + 1] == 0.0) continue;
    const double h = x1 - x0;
    const double slope = (f.values[i + 1] - f.values[i]) / h;
    const cplx fz = f.values[i] + slope * (z - x0);
    const cplx L = log_ratio(x0, x1, z);
    jet.m += slope * h + fz * L;
    if (order >= 1) {
      const cplx q0 = 1.0 / (x0 - z);
      const cplx q1 = 1.0 / (x1 - z);
      const cplx L1 = q0 - q1;
      jet.d1 += slope * L + fz * L1;
      if (order >= 2) {
        const cplx L2 = q0 * q0 - q1 * q1;
        jet.d2 += 2.0 * slope * L1 + fz * L2;
        if (order >= 3) {
          const cplx L3 = 2.0 * (q0 * q0 * q0 - q1 * q1 * q1);
          jet.d3 += 3.0 * slope * L2 + fz * L3;
        }
      }
    }
  }
  return jet;
}

void check_domain(const Measure& mu, cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("stieltjes: non-finite spectral parameter");
  if (z.imag() < 0.0) throw DomainError("stieltjes: spectral parameter in the lower half-plane");
  if (z.imag() == 0.0) {
    const SupportInfo s = mu.support();
    if (z.real() >= s.lower && z.real() <= s.upper)
      throw DomainError("stieltjes: real spectral parameter " + std::to_string(z.real()) +
                        " inside the support interval");
  }
}

double bisect_quantile(const Measure& mu, double p, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mu.cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Measure::Measure(Repr repr) : repr_(std::make_shared<const Repr>(std::move(repr))) {}

Measure Measure::semicircle(double variance, double center) {
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(center))
    throw DomainError("semicircle: variance must be positive and finite");
  return Measure(family::Semicircle{variance, center});
}

Measure Measure::uniform(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("uniform: need finite a < b");
  return Measure(family::Uniform{a, b});
}

Measure Measure::arcsine(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("arcsine: need finite a < b");
  return Measure(family::Arcsine{a, b});
}

Measure Measure::point_mass(double c) {
  if (!std::isfinite(c)) throw DomainError("point_mass: location must be finite");
  return Measure(family::PointMass{c});
}

Measure Measure::atoms(std::vector<double> locations, std::vector<double> weights) {
  if (locations.empty()) throw DomainError("atoms: need at least one atom");
  if (weights.empty()) weights.assign(locations.size(), 1.0);
  if (weights.size() != locations.size())
    throw DomainError("atoms: locations and weights differ in length");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (!std::isfinite(locations[i]) || !std::isfinite(weights[i]) || weights[i] < 0.0)
      throw DomainError("atoms: locations must be finite and weights nonnegative");
  }
  std::vector<std::size_t> order(locations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return locations[i] < locations[j]; });
  family::Atoms f;
  f.locations.reserve(order.size());
  f.weights.reserve(order.size());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("atoms: total weight must be positive");
  for (std::size_t i : order) {
    f.locations.push_back(locations[i]);
    f.weights.push_back(weights[i] / total);
  }
  f.cumulative.resize(f.weights.size());
  std::partial_sum(f.weights.begin(), f.weights.end(), f.cumulative.begin());
  f.cumulative.back() = 1.0;
  return Measure(std::move(f));
}

Measure Measure::grid(std::vector<double> nodes, std::vector<double> values) {
  if (nodes.size() < 2 || nodes.size() != values.size())
    throw DomainError("grid: need at least two nodes and one value per node");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!std::isfinite(nodes[i]) || !std::isfinite(values[i]) || values[i] < 0.0)
      throw DomainError("grid: nodes must be finite and values nonnegative");
    if (i > 0 && !(nodes[i] > nodes[i - 1])) throw DomainError("grid: nodes must increase strictly");
  }
  family::GridDensity f;
  f.weights.assign(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double h = nodes[i + 1] - nodes[i];
    f.weights[i] += 0.5 * h;
    f.weights[i + 1] += 0.5 * h;
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) mass += f.weights[i] * values[i];
  if (!(mass > 0.0)) throw DomainError("grid: density has zero mass");
  for (double& v : values) v /= mass;
  f.cumulative.assign(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    f.cumulative[i + 1] = f.cumulative[i] + 0.5 * (nodes[i + 1] - nodes[i]) * (values[i] + values[i + 1]);
  f.nodes = std::move(nodes);
  f.values = std::move(values);
  return Measure(std::move(f));
}

Measure Measure::from_tag(std::string_view tag, std::span<const double> params,
                          std::span<const double> extra) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi)
      throw ConfigError("measure '" + std::string(tag) + "': expected " + std::to_string(lo) +
                        (lo == hi ? "" : "-" + std::to_string(hi)) + " parameters, got " +
                        std::to_string(params.size()));
  };
  if (tag == "semicircle") {
    need(1, 2);
    return semicircle(params[0], params.size() > 1 ? params[1] : 0.0);
  }
  if (tag == "uniform") {
    need(2, 2);
    return uniform(params[0], params[1]);
  }
  if (tag == "arcsine") {
    need(2, 2);
    return arcsine(params[0], params[1]);
  }
  if (tag == "point_mass") {
    need(1, 1);
    return point_mass(params[0]);
  }
  if (tag == "atoms") {
    need(1, params.size() + 1);
    return atoms({params.begin(), params.end()}, {extra.begin(), extra.end()});
  }
  if (tag == "grid") {
    need(2, params.size() + 1);
    return grid({params.begin(), params.end()}, {extra.begin(), extra.end()});
  }
  throw ConfigError("unknown measure tag '" + std::string(tag) + "'");
}

SupportInfo Measure::support() const {
  return std::visit(
      overloaded{
          [](const family::Semicircle& f) {
            const double r = 2.0 * std::sqrt(f.variance);
            return SupportInfo{f.center - r, f.center + r};
          },
          [](const family::Uniform& f) { return SupportInfo{f.a, f.b}; },
          [](const family::Arcsine& f) { return SupportInfo{f.a, f.b}; },
          [](const family::PointMass& f) { return SupportInfo{f.c, f.c}; },
          [](const family::Atoms& f) {
            // Zero-weight atoms do not belong to the support.
            std::size_t lo = 0, hi = f.locations.size() - 1;
            while (lo < hi && f.weights[lo] == 0.0) ++lo;
            while (hi > lo && f.weights[hi] == 0.0) --hi;
            return SupportInfo{f.locations[lo], f.locations[hi]};
          },
          [](const family::GridDensity& f) {
            std::size_t lo = 0, hi = f.nodes.size() - 1;
            while (lo + 1 < f.nodes.size() && f.values[lo] == 0.0 && f.values[lo + 1] == 0.0) ++lo;
            while (hi > lo + 1 && f.values[hi] == 0.0 && f.values[hi - 1] == 0.0) --hi;
            return SupportInfo{f.nodes[lo], f.nodes[hi]};
          },
      },
      *repr_);
}

double Measure::cdf(double x) const {
  return std::visit(
      overloaded{
          [x](const family::Semicircle& f) {
            const double u = std::clamp((x - f.center) / std::sqrt(f.variance), -2.0, 2.0);
            return 0.5 + u * std::sqrt(4.0 - u * u) / (4.0 * kPi) + std::asin(0.5 * u) / kPi;
          },
          [x](const family::Uniform& f) { return std::clamp((x - f.a) / (f.b - f.a), 0.0, 1.0); },
          [x](const family::Arcsine& f) {
            const double u = std::clamp((2.0 * x - f.a - f.b) / (f.b - f.a), -1.0, 1.0);
            return 0.5 + std::asin(u) / kPi;
          },
          [x](const family::PointMass& f) { return x >= f.c ? 1.0 : 0.0; },
          [x](const family::Atoms& f) {
            const auto it = std::upper_bound(f.locations.begin(), f.locations.end(), x);
            if (it == f.locations.begin()) return 0.0;
            return f.cumulative[static_cast<std::size_t>(it - f.locations.begin()) - 1];
          },
          [x](const family::GridDensity& f) {
            if (x <= f.nodes.front()) return 0.0;
            if (x >= f.nodes.back()) return 1.0;
            const auto it = std::upper_bound(f.nodes.begin(), f.nodes.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - f.nodes.begin()) - 1;
            const double dx = x - f.nodes[i];
            const double slope = (f.values[i + 1] - f.values[i]) / (f.nodes[i + 1] - f.nodes[i]);
            return std::min(1.0, f.cumulative[i] + f.values[i] * dx + 0.5 * slope * dx * dx);
          },
      },
      *repr_);
}

double Measure::mean() const {
  return std::visit(overloaded{
                        [](const family::Semicircle& f) { return f.center; },
                        [](const family::Uniform& f) { return 0.5 * (f.a + f.b); },
                        [](const family::Arcsine& f) { return 0.5 * (f.a + f.b); },
                        [](const family::PointMass& f) { return f.c; },
                        [](const family::Atoms& f) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < f.locations.size(); ++i)
                            s += f.weights[i] * f.locations[i];
                          return s;
                        },
                        [](const family::GridDensity& f) {
                          double s = 0.0;
                          for (std::size_t i = 0; i + 1 < f.nodes.size(); ++i) {
                            const double x0 = f.nodes[i], x1 = f.nodes[i + 1];
                            const double xm = 0.5 * (x0 + x1);
                            const double fm = 0.5 * (f.values[i] + f.values[i + 1]);
                            s += (x1 - x0) / 6.0 * (x0 * f.values[i] + 4.0 * xm * fm + x1 * f.values[i + 1]);
                          }
                          return s;
                        },
                    },
                    *repr_);
}

bool Measure::is_discrete() const {
  return std::holds_alternative<family::PointMass>(*repr_) || std::holds_alternative<family::Atoms>(*repr_);
}

std::string Measure::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const family::Semicircle& f) {
                   os << "semicircle(variance=" << f.variance << ", center=" << f.center << ")";
                 },
                 [&](const family::Uniform& f) { os << "uniform(" << f.a << ", " << f.b << ")"; },
                 [&](const family::Arcsine& f) { os << "arcsine(" << f.a << ", " << f.b << ")"; },
                 [&](const family::PointMass& f) { os << "point_mass(" << f.c << ")"; },
                 [&](const family::Atoms& f) { os << "atoms(n=" << f.locations.size() << ")"; },
                 [&](const family::GridDensity& f) { os << "grid(nodes=" << f.nodes.size() << ")"; },
             },
             *repr_);
  return os.str();
}

StieltjesJet stieltjes_jet(const Measure& mu, cplx z, int order) {
  if (order < 0 || order > 3) throw DomainError("stieltjes_jet: order must be in 0..3");
  check_domain(mu, z);
  StieltjesJet jet = std::visit(
      overloaded{
          [&](const family::Semicircle& f) { return semicircle_jet(f, z, order); },
          [&](const family::Uniform& f) { return uniform_jet(f, z, order); },
          [&](const family::Arcsine& f) { return arcsine_jet(f, z, order); },
          [&](const family::PointMass& f) { return point_mass_jet(f.c, z, order); },
          [&](const family::Atoms& f) { return atoms_jet(f, z, order); },
          [&](const family::GridDensity& f) { return grid_jet(f, z, order); },
      },
      mu.repr());
  if (z.imag() == 0.0) {
    // Off the support on the real line the transform is real.
    jet.m.imag(0.0);
    jet.d1.imag(0.0);
    jet.d2.imag(0.0);
    jet.d3.imag(0.0);
  }
  return jet;
}

cplx stieltjes(const Measure& mu, cplx z) { return stieltjes_jet(mu, z, 0).m; }

cplx stieltjes_derivative(const Measure& mu, cplx z, int k) {
  if (k < 1 || k > 3) throw DomainError("stieltjes_derivative: order must be 1, 2 or 3");
  const StieltjesJet jet = stieltjes_jet(mu, z, k);
  return k == 1 ? jet.d1 : (k == 2 ? jet.d2 : jet.d3);
}

std::vector<double> quantiles(const Measure& mu, std::size_t n) {
  if (n == 0) throw DomainError("quantiles: n must be at least 1");
  std::vector<double> out(n);
  const auto nd = static_cast<double>(n);
  if (const auto* pm = std::get_if<family::PointMass>(&mu.repr())) {
    out.assign(n, pm->c);
    return out;
  }
  if (const auto* at = std::get_if<family::Atoms>(&mu.repr())) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = (static_cast<double>(i) + 0.5) / nd;
      auto it = std::lower_bound(at->cumulative.begin(), at->cumulative.end(), p - 1e-15);
      if (it == at->cumulative.end()) --it;
      out[i] = at->locations[static_cast<std::size_t>(it - at->cumulative.begin())];
    }
    return out;
  }
  const SupportInfo s = mu.support();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / nd;
    out[i] = bisect_quantile(mu, p, s.lower, s.upper);
  }
  return out;
}

double levy_distance(const Measure& a, const Measure& b, std::size_t grid_points) {
  if (grid_points < 2) throw DomainError("levy_distance: need at least two grid points");
  const SupportInfo sa = a.support();
  const SupportInfo sb = b.support();
  const double lo = std::min(sa.lower, sb.lower) - 1.0;
  const double hi = std::max(sa.upper, sb.upper) + 1.0;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::vector<double> xs(grid_points);
  std::vector<double> fb(grid_points);
  for (std::size_t k = 0; k < grid_points; ++k) {
    xs[k] = lo + step * static_cast<double>(k);
    fb[k] = b.cdf(xs[k]);
  }
  constexpr double slack = 1e-14;
  auto sandwiched = [&](double eps) {
    for (std::size_t k = 0; k < grid_points; ++k) {
      if (a.cdf(xs[k] - eps) - eps > fb[k] + slack) return false;
      if (fb[k] > a.cdf(xs[k] + eps) + eps + slack) return false;
    }
    return true;
  };
  if (sandwiched(0.0)) return 0.0;
  double good = 1.0;
  double bad = 0.0;
  while (good - bad > 1e-3 * step) {
    const double mid = 0.5 * (good + bad);
    if (sandwiched(mid))
      good = mid;
    else
      bad = mid;
  }
  return good;
}

}  // namespace fpedge
