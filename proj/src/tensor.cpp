#include "slipfsi/tensor.hpp"

#include <stdexcept>

namespace slipfsi {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor3 mode_product(const Tensor3& A, int axis, const Eigen::MatrixXd& M) {
  if (M.cols() != A.n[axis]) throw std::invalid_argument("mode_product: extent mismatch");
  std::array<int, 3> ext = A.n;
  ext[axis] = static_cast<int>(M.rows());
  Tensor3 B(ext);
  const int before = axis == 0 ? 1 : (axis == 1 ? A.n[0] : A.n[0] * A.n[1]);
  const int after = axis == 2 ? 1 : (axis == 1 ? A.n[2] : A.n[1] * A.n[2]);
  const int q = A.n[axis], p = ext[axis];
  if (after == 1) {
    // rows of (before x q) times M^T
    Eigen::Map<const RowMat> a(A.v.data(), before, q);
    Eigen::Map<RowMat> b(B.v.data(), before, p);
    b.noalias() = a * M.transpose();
    return B;
  }
  for (int s = 0; s < before; ++s) {
    Eigen::Map<const RowMat> a(A.v.data() + static_cast<std::size_t>(s) * q * after, q, after);
    Eigen::Map<RowMat> b(B.v.data() + static_cast<std::size_t>(s) * p * after, p, after);
    b.noalias() = M * a;
  }
  return B;
}

Tensor3 multi_mode_product(const Tensor3& A, int dim, const std::array<const Eigen::MatrixXd*, 3>& mats) {
  // Contract the axis with the largest reduction first.
  std::array<int, 3> order{0, 1, 2};
  Tensor3 cur = A;
  std::array<bool, 3> done{false, false, false};
  for (int step = 0; step < dim; ++step) {
    int best = -1;
    double best_ratio = 0.0;
    for (int a = 0; a < dim; ++a) {
      if (done[a]) continue;
      const double ratio = static_cast<double>(mats[a]->rows()) / static_cast<double>(mats[a]->cols());
      if (best < 0 || ratio < best_ratio) {
        best = a;
        best_ratio = ratio;
      }
    }
    order[step] = best;
    done[best] = true;
    cur = mode_product(cur, best, *mats[best]);
  }
  return cur;
}

}  // namespace slipfsi
