#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "opkern/dilation.hpp"

namespace opkern {

/// Parallel kernels are the default; the serial versions are kept as the
/// reference implementation for tests and benchmarks.
enum class Execution { kSerial, kParallel };

/// N sampled paths W_k : S -> C^d, stored sample-major, then label, then
/// H-coordinate.
class PathBatch {
 public:
  PathBatch(LabelSet labels, std::size_t dim_h, std::size_t samples, std::uint64_t seed,
            std::uint64_t first_index);

  const LabelSet& labels() const { return labels_; }
  std::size_t n() const { return labels_.size(); }
  std::size_t dim_h() const { return dim_h_; }
  std::size_t samples() const { return samples_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t first_index() const { return first_index_; }

  cplx& at(std::size_t k, std::size_t i, std::size_t p) { return data_[offset(k, i, p)]; }
  cplx at(std::size_t k, std::size_t i, std::size_t p) const { return data_[offset(k, i, p)]; }

  /// Path k as a label-major vector of length n*d.
  Eigen::Map<const Vec> path(std::size_t k) const;
  Eigen::Map<Vec> path(std::size_t k);

  const std::vector<cplx>& data() const { return data_; }

  /// Paths of `a` followed by paths of `b`; b must continue a's index range.
  static PathBatch concat(const PathBatch& a, const PathBatch& b);

 private:
  std::size_t offset(std::size_t k, std::size_t i, std::size_t p) const {
    return (k * labels_.size() + i) * dim_h_ + p;
  }

  LabelSet labels_;
  std::size_t dim_h_;
  std::size_t samples_;
  std::uint64_t seed_;
  std::uint64_t first_index_;
  std::vector<cplx> data_;
};

/// Draw k is W(s_j) = V(s_j)^* Z with Z in R^r i.i.d. standard normals taken
/// from the counter stream (seed, k). With the eigenbasis of H(K~) as ONB this
/// is the series W_t = sum_i (V_t^* phi_i) Z_i.
class GaussianSampler {
 public:
  GaussianSampler(FeatureSystem features, std::uint64_t seed);

  const FeatureSystem& feature_system() const { return features_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  /// The single path with global index `index`, label-major length n*d.
  Vec draw(std::uint64_t index) const;

  /// Paths [first, first + count).
  PathBatch sample(std::uint64_t first, std::size_t count,
                   Execution exec = Execution::kParallel) const;

  /// Paths [counter, counter + count); advances the counter.
  PathBatch next(std::size_t count, Execution exec = Execution::kParallel);

 private:
  FeatureSystem features_;
  Mat adjoint_;  // (n*d) x r, rows of V(s_j)^*
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Throws NotPositiveDefinite.
GaussianSampler make_sampler(const OperatorKernelTable& k, std::uint64_t seed,
                             double tol = kDefaultTol);

/// (1/N) sum_k |W_k(s_i)><W_k(s_j)|, the Monte-Carlo estimate of K.
OperatorKernelTable empirical_covariance(const PathBatch& batch,
                                         Execution exec = Execution::kParallel);

/// (1/N) sum_k x_k y_k^* over label-major path vectors, an (n*d) x (n*d) matrix.
Mat empirical_cross_covariance(const PathBatch& x, const PathBatch& y,
                               Execution exec = Execution::kParallel);

/// The H+H valued kernel M(s,t) = [[K(s,t), T(s,t)], [T(t,s)^*, L(s,t)]].
struct JointKernel {
  OperatorKernelTable k;
  OperatorKernelTable l;
  BlockTable coupling;
  OperatorKernelTable m;
  Mat schur_gram{};          ///< K - T pinv(L) T^* at Gram level
  double m_min_eig = 0.0;
  double schur_min_eig = 0.0;
};

/// Interleaves K, L, T into M and checks that M and the Schur complement of L
/// are p.d.; NotPositiveDefinite("M") flags an inadmissible coupling.
JointKernel assemble_joint(const OperatorKernelTable& k, const OperatorKernelTable& l,
                           const BlockTable& coupling, double tol = kDefaultTol);

/// Splits an H+H valued kernel (dim_h = 2d) into K, L, T and assembles it.
JointKernel joint_from_table(const OperatorKernelTable& m, double tol = kDefaultTol);

/// Samples the H+H valued process of M and splits every path into its
/// K-part (first d coordinates) and L-part (last d).
std::pair<PathBatch, PathBatch> sample_joint(const JointKernel& joint, std::uint64_t seed,
                                             std::size_t samples,
                                             Execution exec = Execution::kParallel);

struct ConditionalLaw {
  Mat mean_map{};  ///< T_gram L_gram^{-1}
  Mat mean{};      ///< n x d conditional mean for the observed L-path
  OperatorKernelTable cond_cov;
  std::size_t null_space_dim = 0;  ///< dimension of ker L_gram (pseudo-inverse mode)
};

/// Gaussian conditioning of the K-part on an observed L-path (n x d) over the
/// full index set. SingularL unless sigma_min(L_gram) > tol * sigma_max; with
/// allow_pseudo_inverse a rank-deficient L is handled on its range.
ConditionalLaw condition(const JointKernel& joint, const Mat& observed_l, double tol = kDefaultTol,
                         bool allow_pseudo_inverse = false);

/// Per-label mean T(s,s) L(s,s)^{-1} W_L(s). Agrees with condition() when L
/// and T are block-diagonal over S.
Mat pointwise_conditional_mean(const JointKernel& joint, const Mat& observed_l);

struct CovEqualReport {
  bool equal = false;
  double residual = 0.0;  ///< |(K1 - T L1^{-1} T^*) - (K2 - T L2^{-1} T^*)|
  double scale = 0.0;
  bool common_pd = false;  ///< the common Schur complement is p.d.
};

/// Compares the conditional covariances of the two joint systems. SingularL if
/// either L_i is not invertible at Gram level.
CovEqualReport conditional_cov_equal(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                                     const OperatorKernelTable& l1, const OperatorKernelTable& l2,
                                     const BlockTable& coupling, double tol = kDefaultTol);

struct McConditionalReport {
  Mat mean_map_truth{}, mean_map_estimate{};
  Mat cond_cov_truth{}, cond_cov_estimate{};
  double mean_map_max_z = 0.0;  ///< worst deviation in standard errors
  double cond_cov_max_z = 0.0;
  std::size_t samples = 0;
  bool pass = false;
};

/// Draws N joint samples, regresses the K-part on the L-part and compares the
/// empirical mean map and residual covariance with condition(). Standard
/// errors come from 50 batch means.
McConditionalReport mc_verify_conditional(const JointKernel& joint, std::uint64_t seed,
                                          std::size_t samples, double tol_sigma = 5.0,
                                          Execution exec = Execution::kParallel);

}  // namespace opkern
