#pragma once

#include <cstddef>
#include <vector>

namespace fpedge {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

GaussLegendre gauss_legendre(std::size_t order);

/// Cached rule; safe to call from several threads.
const GaussLegendre& gauss_legendre_cached(std::size_t order);

}  // namespace fpedge
