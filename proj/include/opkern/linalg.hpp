#pragma once

#include <complex>

#include <Eigen/Dense>

namespace opkern {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

namespace linalg {

/// Eigenpairs of a Hermitian matrix, eigenvalues in DESCENDING order.
/// Each eigenvector is phase-normalized so that its largest-magnitude entry
/// (first on exact ties) is real and positive.
struct HermitianEigen {
  RealVec values;
  Mat vectors;
};

HermitianEigen hermitian_eig(const Mat& m);

/// Smallest eigenvalue of a Hermitian matrix (0 for an empty matrix).
double min_eigenvalue(const Mat& hermitian);

/// (M + M*) / 2
Mat hermitian_part(const Mat& m);

/// Spectral norm; 0 for empty matrices.
double op_norm(const Mat& m);

/// Singular values in descending order.
RealVec singular_values(const Mat& m);

/// Moore-Penrose pseudo-inverse; singular values <= rel_cutoff * sigma_max are dropped.
Mat pinv(const Mat& m, double rel_cutoff = 1e-10);

/// Orthonormal basis of range(m) with the same relative cutoff convention.
Mat range_basis(const Mat& m, double rel_cutoff = 1e-10);

/// Principal square root of a Hermitian PSD matrix; eigenvalues are clamped at 0.
Mat sqrt_psd(const Mat& hermitian);

/// Largest principal angle (radians) between the column spaces of two
/// orthonormal bases. Returns pi/2 if the dimensions differ.
double max_principal_angle(const Mat& q1, const Mat& q2);

}  // namespace linalg
}  // namespace opkern
