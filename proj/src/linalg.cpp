#include "opkern/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace opkern::linalg {

HermitianEigen hermitian_eig(const Mat& m) {
  HermitianEigen out;
  const Eigen::Index n = m.rows();
  if (n == 0) {
    out.values.resize(0);
    out.vectors.resize(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(hermitian_part(m));
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < n; ++k) {
    auto col = out.vectors.col(k);
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(col(i));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (best > 0.0) col *= std::conj(col(arg)) / best;
  }
  return out;
}

double min_eigenvalue(const Mat& hermitian) {
  if (hermitian.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> solver(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

Mat hermitian_part(const Mat& m) { return (m + m.adjoint()) * 0.5; }

RealVec singular_values(const Mat& m) {
  if (m.size() == 0) return RealVec(0);
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

Mat pinv(const Mat& m, double rel_cutoff) {
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& s = svd.singularValues();
  const double cut = rel_cutoff * s(0);
  Mat out = Mat::Zero(m.cols(), m.rows());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) <= cut || s(k) == 0.0) break;
    out += svd.matrixV().col(k) * (1.0 / s(k)) * svd.matrixU().col(k).adjoint();
  }
  return out;
}

Mat range_basis(const Mat& m, double rel_cutoff) {
  if (m.size() == 0) return Mat::Zero(m.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const RealVec& s = svd.singularValues();
  const double cut = rel_cutoff * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut && s(rank) > 0.0) ++rank;
  return svd.matrixU().leftCols(rank);
}

Mat sqrt_psd(const Mat& hermitian) {
  if (hermitian.rows() == 0) return hermitian;
  Eigen::SelfAdjointEigenSolver<Mat> solver(hermitian_part(hermitian));
  RealVec roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().adjoint();
}

double max_principal_angle(const Mat& q1, const Mat& q2) {
  if (q1.cols() != q2.cols()) return std::numbers::pi / 2;
  if (q1.cols() == 0) return 0.0;
  // sin of the largest angle is the norm of the part of q2 outside range(q1)
  const Mat outside = q2 - q1 * (q1.adjoint() * q2);
  return std::asin(std::min(1.0, op_norm(outside)));
}

}  // namespace opkern::linalg
