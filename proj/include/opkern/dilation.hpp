#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opkern/kernel.hpp"

namespace opkern {

/// An element of the dilation space H(K~), in the coordinates of a
/// FeatureSystem's basis.
struct DilationVector {
  Vec coords;
};

/// Feature operators V(s): C^d -> C^r with K(s,t) = V(s)^* V(t).
///
/// Produced by kolmogorov_factorize, the dilation space is C^r with r the
/// numerical rank of flatten(K) and the basis given by the retained
/// eigenvectors, so the system is minimal. Other factorizations (e.g. the one
/// used by the Radon-Nikodym route) can be wrapped with from_features; those
/// need not be minimal.
class FeatureSystem {
 public:
  static FeatureSystem from_features(LabelSet labels, std::size_t dim_h, std::vector<Mat> features,
                                     RealVec basis_eigs = {});

  const LabelSet& labels() const { return labels_; }
  std::size_t n() const { return labels_.size(); }
  std::size_t dim_h() const { return dim_h_; }
  std::size_t dilation_dim() const { return dilation_dim_; }

  const Mat& feature(std::size_t i) const { return features_.at(i); }
  const Mat& feature(std::string_view label) const { return features_[labels_.index_of(label)]; }
  const std::vector<Mat>& features() const { return features_; }

  /// Positive eigenvalues of the flattened Gram that span the basis (descending);
  /// empty for systems not built by kolmogorov_factorize.
  const RealVec& basis_eigs() const { return basis_eigs_; }

  /// r x (n*d) matrix [V(s_1) ... V(s_n)].
  Mat stacked() const;

  /// The kernel this system reproduces: flat = stacked^* stacked.
  OperatorKernelTable gram() const;

 private:
  FeatureSystem(LabelSet labels, std::size_t dim_h, std::size_t r, std::vector<Mat> features,
                RealVec basis_eigs);

  LabelSet labels_;
  std::size_t dim_h_;
  std::size_t dilation_dim_;
  std::vector<Mat> features_;
  RealVec basis_eigs_;
};

/// Kolmogorov factorization through the eigenbasis of the flattened Gram:
/// flatten(K) = U L U^*, keep eigenpairs with lambda > tol * lambda_max and set
/// stacked = L_r^{1/2} U_r^*. Throws NotPositiveDefinite if
/// lambda_min < -tol * |flat|.
FeatureSystem kolmogorov_factorize(const OperatorKernelTable& k, double tol = kDefaultTol);

/// Max over label pairs of |V(s_i)^* V(s_j) - K(s_i,s_j)|.
double reproduction_residual(const FeatureSystem& f, const OperatorKernelTable& k);

/// V(t) b, the representative of K~(., (t, b)).
DilationVector embed(const FeatureSystem& f, std::string_view t, const Vec& b);

/// V(s)^* v. In particular adjoint_apply(f, s, embed(f, t, b)) = K(s,t) b.
Vec adjoint_apply(const FeatureSystem& f, std::string_view s, const DilationVector& v);

/// Applies V(s_1)V(s_1)^* ... V(s_m)V(s_m)^* to embed(f, t, b) (rightmost
/// factor first) and checks the result against the closed form
/// embed(f, s_1, K(s_1,s_2)...K(s_m,t) b). For unital kernels (K(s,s) = I)
/// the factors are orthogonal projections and contractivity is checked too.
/// Throws InternalInvariantViolation if either check fails.
DilationVector projection_chain(const FeatureSystem& f, std::span<const std::string> chain,
                                std::string_view t, const Vec& b);

/// True if K(s,s) = I_d for every label, within tol.
bool is_unital(const FeatureSystem& f, double tol = 1e-9);

/// Numerical rank of flatten(K); the dimension of the minimal dilation space.
std::size_t minimal_dilation_dim(const OperatorKernelTable& k, double tol = kDefaultTol);

}  // namespace opkern
