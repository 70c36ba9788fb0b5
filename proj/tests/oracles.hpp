#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's linear algebra: eigenvalues come from a plain cyclic
// Jacobi sweep and kernel quantities from explicit index loops.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "opkern/kernel.hpp"

namespace oracle {

using cplx = std::complex<double>;

/// Eigenvalues (ascending) of a real symmetric matrix, row-major, by cyclic Jacobi.
inline std::vector<double> jacobi_symmetric(std::vector<double> a, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Eigenvalues (ascending) of a Hermitian matrix through its real embedding
/// [[Re, -Im], [Im, Re]], which doubles every eigenvalue.
inline std::vector<double> hermitian_eigenvalues(const opkern::Mat& h) {
  const std::size_t n = static_cast<std::size_t>(h.rows());
  std::vector<double> a(4 * n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const cplx z = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      a[i * 2 * n + j] = z.real();
      a[i * 2 * n + j + n] = -z.imag();
      a[(i + n) * 2 * n + j] = z.imag();
      a[(i + n) * 2 * n + j + n] = z.real();
    }
  const auto doubled = jacobi_symmetric(std::move(a), 2 * n);
  std::vector<double> out;
  for (std::size_t i = 0; i < doubled.size(); i += 2) out.push_back(0.5 * (doubled[i] + doubled[i + 1]));
  return out;
}

inline double min_eigenvalue(const opkern::Mat& h) { return hermitian_eigenvalues(h).front(); }

/// Flattened Gram matrix assembled entry by entry from block lookups.
inline opkern::Mat flatten_by_lookup(const opkern::BlockTable& k) {
  const std::size_t n = k.n(), d = k.dim_h();
  opkern::Mat out(static_cast<Eigen::Index>(n * d), static_cast<Eigen::Index>(n * d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const opkern::Mat b = k.block(i, j);
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q)
          out(static_cast<Eigen::Index>(i * d + p), static_cast<Eigen::Index>(j * d + q)) =
              b(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
  return out;
}

/// sum_ij <a_i, K(s_i, s_j) a_j> with conjugation on the left argument.
inline cplx quadratic_form(const opkern::BlockTable& k, const std::vector<opkern::Vec>& a) {
  cplx total = 0.0;
  const std::size_t d = k.dim_h();
  for (std::size_t i = 0; i < k.n(); ++i)
    for (std::size_t j = 0; j < k.n(); ++j) {
      const opkern::Mat b = k.block(i, j);
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q)
          total += std::conj(a[i](static_cast<Eigen::Index>(p))) *
                   b(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) *
                   a[j](static_cast<Eigen::Index>(q));
    }
  return total;
}

/// Max absolute entry difference.
inline double max_abs_diff(const opkern::Mat& a, const opkern::Mat& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

/// Rank-one partial isometry mapping g to f when |g| = |f|: f g^* / |g|^2.
inline opkern::Mat outer_product_map(const opkern::Vec& f, const opkern::Vec& g) {
  return f * g.adjoint() / g.squaredNorm();
}

}  // namespace oracle
