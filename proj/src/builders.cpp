#include "opkern/builders.hpp"

#include <cmath>

#include "opkern/rng.hpp"

namespace opkern {

namespace {

using Index = Eigen::Index;

void check_points(const Mat& h, const LabelSet& labels, std::span<const Mat> points) {
  if (h.rows() != h.cols()) throw ShapeError("h must be square");
  if (points.size() != labels.size()) throw ShapeError("one point per label is required");
  for (const Mat& p : points)
    if (p.rows() != h.rows() || p.cols() != h.cols())
      throw ShapeError("points must have the same shape as h");
  const double norm = linalg::op_norm(h);
  if (!(norm < 1.0)) throw NotStrictContraction(norm);
}

}  // namespace

OperatorKernelTable identity_kernel(const LabelSet& labels, std::size_t dim_h) {
  const Index size = static_cast<Index>(labels.size() * dim_h);
  return OperatorKernelTable::from_flat(labels, dim_h, Mat::Identity(size, size));
}

OperatorKernelTable constant_kernel(const LabelSet& labels, const Mat& value) {
  if (value.rows() != value.cols() || value.rows() == 0)
    throw ShapeError("constant kernel value must be a non-empty square matrix");
  const std::vector<Mat> blocks(labels.size() * labels.size(), value);
  return OperatorKernelTable::from_blocks(labels, static_cast<std::size_t>(value.rows()), blocks);
}

OperatorKernelTable cp_contraction_kernel(const Mat& h, const LabelSet& labels,
                                          std::span<const Mat> points) {
  check_points(h, labels, points);
  const std::size_t n = labels.size();
  const Mat id = Mat::Identity(h.rows(), h.cols());
  std::vector<Mat> blocks;
  blocks.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      blocks.push_back(id - h.adjoint() * (points[i].adjoint() * points[j]) * h);
  return OperatorKernelTable::from_blocks(labels, static_cast<std::size_t>(h.rows()), blocks);
}

std::size_t neumann_truncation_order(const Mat& h, std::span<const Mat> points, double tol) {
  double largest = 0.0;
  for (const Mat& si : points)
    for (const Mat& sj : points) largest = std::max(largest, linalg::op_norm(si.adjoint() * sj));
  const double ratio = std::pow(linalg::op_norm(h), 2);
  if (largest == 0.0 || ratio == 0.0) return 0;
  std::size_t order = 0;
  double bound = ratio * largest;
  while (!(bound < tol)) {
    ++order;
    bound *= ratio;
  }
  return order;
}

OperatorKernelTable neumann_series_kernel(const Mat& h, const LabelSet& labels,
                                          std::span<const Mat> points, double tol) {
  check_points(h, labels, points);
  const std::size_t order = neumann_truncation_order(h, points, tol);
  const std::size_t n = labels.size();
  std::vector<Mat> blocks;
  blocks.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Mat term = points[i].adjoint() * points[j];
      Mat sum = term;
      for (std::size_t m = 1; m <= order; ++m) {
        term = h.adjoint() * term * h;
        sum += term;
      }
      blocks.push_back(std::move(sum));
    }
  auto kernel =
      OperatorKernelTable::from_blocks(labels, static_cast<std::size_t>(h.rows()), blocks);
  // every term (s_i h^m)^*(s_j h^m) is a Gram kernel, so the sum must be too
  const PdReport pd = is_positive_definite(kernel);
  if (!pd.pd)
    throw InternalInvariantViolation("Neumann series kernel is not positive definite (min eig " +
                                     std::to_string(pd.min_eig) + ")");
  return kernel;
}

Mat random_complex_matrix(std::uint64_t seed, std::uint64_t stream, Index rows, Index cols) {
  Mat g(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const auto lane = static_cast<std::uint64_t>(2 * (i * cols + j));
      g(i, j) = cplx(rng::normal(seed, stream, 0, lane), rng::normal(seed, stream, 0, lane + 1));
    }
  return g;
}

OperatorKernelTable random_pd_kernel(std::uint64_t seed, std::size_t n, std::size_t dim_h,
                                     std::size_t rank) {
  if (n == 0 || dim_h == 0) throw ShapeError("random_pd_kernel: n and d must be positive");
  if (rank < 1 || rank > n * dim_h) throw ShapeError("random_pd_kernel: need 1 <= rank <= n*d");
  const Mat g = random_complex_matrix(seed, rng::kKernelStream, static_cast<Index>(rank),
                                      static_cast<Index>(n * dim_h));
  return OperatorKernelTable::from_flat(LabelSet::numbered(n), dim_h, g.adjoint() * g);
}

}  // namespace opkern
