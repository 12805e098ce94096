#pragma once

#include <vector>

namespace sas {

// Gauss-Legendre rule on [-1, 1]; exact for polynomials up to degree 2n-1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  static QuadratureRule gauss_legendre(int n);
  int order() const { return int(nodes.size()); }

  template <class F>
  double integrate(double a, double b, F&& f) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0;
    for (size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * f(mid + half * nodes[k]);
    return half * acc;
  }
};

}  // namespace sas
