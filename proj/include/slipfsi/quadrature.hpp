#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace slipfsi {

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

/// Composite Gauss rule along one axis of a uniform grid on [0, length].
struct AxisQuadrature {
  double length = 1.0;
  int cells = 1;
  int points_per_cell = 1;
  std::vector<double> x;  // cells * points_per_cell nodes, cell-major
  std::vector<double> w;

  double cell_size() const { return length / cells; }
  std::size_t size() const { return x.size(); }
};

AxisQuadrature composite_gauss(double length, int cells, int points_per_cell);

/// Tensor product of per-axis composite rules; point index is row-major
/// with axis 0 slowest.
struct TensorQuadrature {
  int dim = 2;
  std::array<AxisQuadrature, 3> axes;

  std::size_t size() const;
  std::array<std::size_t, 3> extents() const;
};

TensorQuadrature tensor_quadrature(int dim, const std::array<double, 3>& lengths,
                                   const std::array<int, 3>& cells, int points_per_cell);

}  // namespace slipfsi
