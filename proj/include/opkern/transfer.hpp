#pragma once

#include <string_view>

#include "opkern/dilation.hpp"

namespace opkern {

/// Four p.d. kernels and an operator T on H with K1 - T^*L1 T = K2 - T^*L2 T.
struct SignedKernelSystem {
  OperatorKernelTable k1, k2, l1, l2;
  Mat t;

  /// Residual scale: max of the four kernel norms and |T|^2 |L_i|.
  double scale() const;
};

/// Max block norm of (K1 - K2) - T^*(L1 - L2)T. Throws ShapeError on mismatch.
double equivalence_residual(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                    const OperatorKernelTable& l1, const OperatorKernelTable& l2, const Mat& t);

/// Checks positivity of all four kernels (NotPositiveDefinite names the
/// offender) and the balance law (NotEquivalent carries the residual).
SignedKernelSystem validate_system(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                                   const OperatorKernelTable& l1, const OperatorKernelTable& l2,
                                   const Mat& t, double tol = kDefaultTol);

struct SystemFeatures {
  FeatureSystem k1, k2, l1, l2;
};

SystemFeatures factorize_system(const SignedKernelSystem& sys, double tol = kDefaultTol);

/// W = [[A, B], [C, D]] mapping H(K~2) + H(L~1) onto H(K~1) + H(L~2), with
/// [V_K2(s); V_L1(s)T] x  ->  [V_K1(s); V_L2(s)T] x  for every s, x.
struct TransferRealization {
  Mat w{};
  Mat a{}, b{}, c{}, d{};
  Mat initial_basis{};  ///< orthonormal basis of the initial space (columns)
  Mat final_basis{};    ///< orthonormal basis of the final space (columns)
  Mat g{};              ///< input columns [V_K2(s); V_L1(s)T] over (s, e_p)
  Mat f{};              ///< output columns [V_K1(s); V_L2(s)T] over (s, e_p)
  SystemFeatures features;
  double gram_mismatch = 0.0;  ///< |G^*G - F^*F|
};

/// Builds W = F pinv(G) restricted to range(G). Fails with GramMismatch if
/// |G^*G - F^*F| > 1e-9 * scale, i.e. the column map is not isometric.
TransferRealization construct_partial_isometry(const SignedKernelSystem& sys,
                                               double tol = kDefaultTol);
/// Same, with caller-chosen factorizations of the four kernels.
TransferRealization construct_partial_isometry(const SignedKernelSystem& sys,
                                               SystemFeatures features, double tol = kDefaultTol);

/// max(|W^*W - P_init|, |WW^* - P_fin|, |WW^*W - W|)
double partial_isometry_defect(const TransferRealization& real);

/// |W G - F|
double intertwining_residual(const TransferRealization& real);

/// M(s) = V_L2(s) - D V_L1(s), an r_L2 x d matrix.
Mat transfer_denominator(const TransferRealization& real, std::string_view s);

/// T12(s) = A + B V_L1(s) pinv(M(s)) C. Requires M(s) to have full column
/// rank with sigma_min > tol * sigma_max, otherwise NotInvertible.
Mat transfer_function(const TransferRealization& real, std::string_view s,
                      double tol = kDefaultTol);

/// min over labels of sigma_min / sigma_max of M(s); 0 when r_L2 < d.
double invertibility_ratio(const TransferRealization& real);

struct RealizationReport {
  double feature_residual = 0.0;   ///< max_s |V_K1(s) - T12(s)V_K2(s)|
  double kernel_residual = 0.0;  ///< max_{s,t} |K1(s,t) - V_K1(s)^* T12(t) V_K2(t)|
  double scale = 0.0;
  bool ok = false;  ///< both residuals <= tol * scale
};

/// Propagates NotInvertible from transfer_function.
RealizationReport verify_realization(const TransferRealization& real, const SignedKernelSystem& sys,
                                     double tol = 1e-8);

/// The largest principal angle between span{T12(s)V_K2(s)a} and the
/// dilation space of K1.
double transitive_action_angle(const SignedKernelSystem& sys, const TransferRealization& real);

/// True iff span{T12(s)V_K2(s)a : s, a} equals the dilation space of K1,
/// every principal angle <= tol.
bool transitive_action_check(const SignedKernelSystem& sys, const TransferRealization& real,
                             double tol = 1e-8);

/// dL/dK acting on the dilation space of K, in the basis of `basis`.
struct RNDerivative {
  Mat phi{};
  Mat sqrt_phi{};
  FeatureSystem basis;      ///< kolmogorov_factorize(K)
  double spectrum_min = 0;  ///< before clamping to [0, 1]
  double spectrum_max = 0;
};

/// Solves L(s,t) = V_K(s)^* Phi V_K(t) with Phi = pinv(V)^* flat(L) pinv(V).
/// NotDominated unless L <= K; SpectrumOutOfRange if the spectrum of Phi
/// leaves [-tol, 1 + tol]. Eigenvalues inside the tolerance band are clamped.
RNDerivative radon_nikodym(const OperatorKernelTable& l, const OperatorKernelTable& k,
                           double tol = 1e-9);

struct RnTransferReport {
  double rn_min = 0.0;
  double rn_max = 0.0;
  /// max_s |Phi^{1/2} V_K2(s) - T12(s) V_K2(s)| with V_K1 := Phi^{1/2} V_K2
  double rn_vs_transfer = 0.0;
  /// same identity through the minimal factorization of K1, transported into
  /// H(K~2) by the isometry V_K1(s)a -> Phi^{1/2} V_K2(s)a
  double rn_vs_transfer_minimal = 0.0;
  double scale = 0.0;
  bool ok = false;
};

/// Checks sqrt(dK1/dK2) = T12 on span{V_K2(s)a}. Requires K1 <= K2
/// (NotDominated) and left-invertibility at every label (NotInvertible).
RnTransferReport verify_rn_transfer_identity(const SignedKernelSystem& sys, double tol = 1e-8);

}  // namespace opkern
