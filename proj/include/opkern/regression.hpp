#pragma once

#include <string>
#include <vector>

#include "opkern/kernel.hpp"

namespace opkern {

/// One observation y at the point (s, a) of S x H.
struct TrainingSample {
  std::string label;
  Vec a;
  cplx y;
};

struct TrainingSet {
  std::vector<TrainingSample> samples;

  std::size_t size() const { return samples.size(); }
  Vec targets() const;
};

/// [K~]_ij = <a_i, K(s_i,s_j) a_j> and likewise for L.
struct DesignMatrices {
  Mat ktilde{};
  Mat ltilde{};
};

/// Throws LabelError for labels outside the kernel's LabelSet and
/// InternalInvariantViolation if a Gram matrix comes out indefinite.
DesignMatrices design_matrices(const OperatorKernelTable& k, const OperatorKernelTable& l,
                               const TrainingSet& train);

/// Representer coefficients c = ([L~] + [K~])^{-1} y of the minimizer
/// f* = sum_i c_i K~(., (s_i, a_i)).
struct RegressionFit {
  Vec coefficients{};
  Vec fitted{};  ///< [K~] c, the minimizer evaluated at the training points
  TrainingSet training;
  OperatorKernelTable k;
};

/// SingularSystem unless sigma_min([L~] + [K~]) > tol * sigma_max.
RegressionFit krr_fit(const OperatorKernelTable& k, const DesignMatrices& dm, const TrainingSet& train,
                      const Vec& y, double tol = kDefaultTol);
RegressionFit krr_fit(const OperatorKernelTable& k, const OperatorKernelTable& l,
                      const TrainingSet& train, double tol = kDefaultTol);

/// f*(s, a) = sum_i c_i <a, K(s, s_i) a_i>; reproduces ([K~] c)_j at training point j.
cplx predict(const RegressionFit& fit, std::string_view s, const Vec& a);

/// (K~g - y)^* [L~]^{-1} (K~g - y) + g^* K~ g for f = sum_i g_i K~(., (s_i, a_i)).
/// SingularL if [L~] is not invertible.
double objective_value(const DesignMatrices& dm, const Vec& y, const Vec& g);
double objective_value(const OperatorKernelTable& k, const OperatorKernelTable& l,
                       const TrainingSet& train, const Vec& y, const Vec& g);

/// K_gram (K_gram + L_gram)^{-1} vec(Y), reshaped to n x d.
/// SingularSystem if K_gram + L_gram is not invertible.
Mat gp_posterior_mean(const OperatorKernelTable& k, const OperatorKernelTable& l,
                      const Mat& observed_y, double tol = kDefaultTol);

/// The full grid {(s_i, e_p)} with y = vec(Y), label-major.
TrainingSet full_grid_training_set(const LabelSet& labels, const Mat& observed_y);

}  // namespace opkern
