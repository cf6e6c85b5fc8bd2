#include "slipfsi/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slipfsi {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

AxisQuadrature composite_gauss(double length, int cells, int points_per_cell) {
  AxisQuadrature q;
  q.length = length;
  q.cells = cells;
  q.points_per_cell = points_per_cell;
  const GaussRule g = gauss_legendre(points_per_cell);
  const double h = length / cells;
  q.x.reserve(static_cast<std::size_t>(cells) * points_per_cell);
  q.w.reserve(q.x.capacity());
  for (int c = 0; c < cells; ++c) {
    const double mid = (c + 0.5) * h;
    for (int k = 0; k < points_per_cell; ++k) {
      q.x.push_back(mid + 0.5 * h * g.nodes[k]);
      q.w.push_back(0.5 * h * g.weights[k]);
    }
  }
  return q;
}

std::size_t TensorQuadrature::size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= axes[a].size();
  return n;
}

std::array<std::size_t, 3> TensorQuadrature::extents() const {
  std::array<std::size_t, 3> e{1, 1, 1};
  for (int a = 0; a < dim; ++a) e[a] = axes[a].size();
  return e;
}

TensorQuadrature tensor_quadrature(int dim, const std::array<double, 3>& lengths,
                                   const std::array<int, 3>& cells, int points_per_cell) {
  TensorQuadrature tq;
  tq.dim = dim;
  for (int a = 0; a < dim; ++a) tq.axes[a] = composite_gauss(lengths[a], cells[a], points_per_cell);
  return tq;
}

}  // namespace slipfsi
