#pragma once

#include <cstdint>
#include <span>

#include "opkern/kernel.hpp"

namespace opkern {

/// K(s,t) = delta_st * I_d
OperatorKernelTable identity_kernel(const LabelSet& labels, std::size_t dim_h);

/// K(s,t) = value for every pair; value must be Hermitian.
OperatorKernelTable constant_kernel(const LabelSet& labels, const Mat& value);

/// K(s_i,s_j) = I - h^*(s_i^* s_j)h, the kernel of the completely positive map
/// t -> I - phi_h(t), phi_h(t) = h^* t h, evaluated at s^* t.
/// points[i] is the d x d matrix attached to labels[i]. Requires |h| < 1.
OperatorKernelTable cp_contraction_kernel(const Mat& h, const LabelSet& labels,
                                          std::span<const Mat> points);

/// Smallest N with |h|^(2(N+1)) * max_ij |s_i^* s_j| < tol.
std::size_t neumann_truncation_order(const Mat& h, std::span<const Mat> points, double tol);

/// K(s_i,s_j) = sum_{m=0}^{N} h^{*m}(s_i^* s_j)h^m, the pointwise Neumann
/// series of (I - phi_h)^{-1}, truncated at neumann_truncation_order.
/// The result is checked positive definite (InternalInvariantViolation otherwise).
OperatorKernelTable neumann_series_kernel(const Mat& h, const LabelSet& labels,
                                          std::span<const Mat> points, double tol = 1e-12);

/// flat = G^* G for a seeded (rank) x (n*d) complex Gaussian matrix G.
/// Labels are "s1".."sn".
OperatorKernelTable random_pd_kernel(std::uint64_t seed, std::size_t n, std::size_t dim_h,
                                     std::size_t rank);

/// A seeded complex Gaussian matrix with N(0,1) real and imaginary parts.
Mat random_complex_matrix(std::uint64_t seed, std::uint64_t stream, Eigen::Index rows,
                          Eigen::Index cols);

}  // namespace opkern
