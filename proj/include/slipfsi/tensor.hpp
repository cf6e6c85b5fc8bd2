#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

namespace slipfsi {

/// Dense row-major array of up to three axes (unused axes have extent 1).
struct Tensor3 {
  std::array<int, 3> n{1, 1, 1};
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int n0, int n1, int n2, double fill = 0.0) : n{n0, n1, n2}, v(static_cast<std::size_t>(n0) * n1 * n2, fill) {}
  explicit Tensor3(const std::array<int, 3>& ext, double fill = 0.0) : Tensor3(ext[0], ext[1], ext[2], fill) {}

  std::size_t size() const { return v.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k;
  }
  double& operator()(int i, int j, int k) { return v[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return v[index(i, j, k)]; }
};

/// Returns B with B along `axis` equal to M applied to A along `axis`
/// (B_{..p..} = sum_q M(p, q) A_{..q..}).
Tensor3 mode_product(const Tensor3& A, int axis, const Eigen::MatrixXd& M);

/// Applies one matrix per axis (only the first `dim` axes).
Tensor3 multi_mode_product(const Tensor3& A, int dim, const std::array<const Eigen::MatrixXd*, 3>& mats);

}  // namespace slipfsi
