#include "opkern/transfer.hpp"

#include <algorithm>
#include <cmath>

namespace opkern {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void check_shapes(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                  const OperatorKernelTable& l1, const OperatorKernelTable& l2, const Mat& t) {
  if (!k1.same_shape(k2) || !k1.same_shape(l1) || !k1.same_shape(l2))
    throw ShapeError("the four kernels must share labels and dim_h");
  const Index d = idx(k1.dim_h());
  if (t.rows() != d || t.cols() != d) throw ShapeError("T must be d x d");
}

/// Column blocks [top(s); bottom(s) T] for every label, stacked left to right.
Mat stacked_columns(const FeatureSystem& top, const FeatureSystem& bottom, const Mat& t) {
  const Index d = idx(top.dim_h());
  const Index rt = idx(top.dilation_dim());
  const Index rb = idx(bottom.dilation_dim());
  Mat out(rt + rb, idx(top.n()) * d);
  for (std::size_t i = 0; i < top.n(); ++i) {
    out.block(0, idx(i) * d, rt, d) = top.feature(i);
    out.block(rt, idx(i) * d, rb, d) = bottom.feature(i) * t;
  }
  return out;
}

}  // namespace

double SignedKernelSystem::scale() const {
  const double t2 = std::pow(linalg::op_norm(t), 2);
  return std::max({k1.scale(), k2.scale(), t2 * l1.scale(), t2 * l2.scale()});
}

double equivalence_residual(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                    const OperatorKernelTable& l1, const OperatorKernelTable& l2, const Mat& t) {
  check_shapes(k1, k2, l1, l2, t);
  return max_block_residual(k1 - k2, (l1 - l2).congruence(t));
}

SignedKernelSystem validate_system(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                                   const OperatorKernelTable& l1, const OperatorKernelTable& l2,
                                   const Mat& t, double tol) {
  check_shapes(k1, k2, l1, l2, t);
  const std::pair<const char*, const OperatorKernelTable*> kernels[] = {
      {"K1", &k1}, {"K2", &k2}, {"L1", &l1}, {"L2", &l2}};
  for (const auto& [name, kernel] : kernels) {
    const PdReport pd = is_positive_definite(*kernel, tol);
    if (!pd.pd) throw NotPositiveDefinite(name, pd.min_eig);
  }
  SignedKernelSystem sys{k1, k2, l1, l2, t};
  const double residual = equivalence_residual(k1, k2, l1, l2, t);
  if (residual > tol * sys.scale()) throw NotEquivalent(residual);
  return sys;
}

SystemFeatures factorize_system(const SignedKernelSystem& sys, double tol) {
  return SystemFeatures{kolmogorov_factorize(sys.k1, tol), kolmogorov_factorize(sys.k2, tol),
                        kolmogorov_factorize(sys.l1, tol), kolmogorov_factorize(sys.l2, tol)};
}

TransferRealization construct_partial_isometry(const SignedKernelSystem& sys, double tol) {
  return construct_partial_isometry(sys, factorize_system(sys, tol), tol);
}

TransferRealization construct_partial_isometry(const SignedKernelSystem& sys,
                                               SystemFeatures features, double tol) {
  TransferRealization real{.features = std::move(features)};
  const SystemFeatures& fs = real.features;
  real.g = stacked_columns(fs.k2, fs.l1, sys.t);
  real.f = stacked_columns(fs.k1, fs.l2, sys.t);

  real.gram_mismatch = linalg::op_norm(real.g.adjoint() * real.g - real.f.adjoint() * real.f);
  if (real.gram_mismatch > 1e-9 * sys.scale()) throw GramMismatch(real.gram_mismatch);

  real.initial_basis = linalg::range_basis(real.g, tol);
  real.final_basis = linalg::range_basis(real.f, tol);
  // pinv(G) already vanishes on range(G)^perp; the projector makes that explicit
  real.w = real.f * linalg::pinv(real.g, tol) * (real.initial_basis * real.initial_basis.adjoint());

  const Index rk1 = idx(fs.k1.dilation_dim());
  const Index rk2 = idx(fs.k2.dilation_dim());
  const Index rl1 = idx(fs.l1.dilation_dim());
  const Index rl2 = idx(fs.l2.dilation_dim());
  real.a = real.w.block(0, 0, rk1, rk2);
  real.b = real.w.block(0, rk2, rk1, rl1);
  real.c = real.w.block(rk1, 0, rl2, rk2);
  real.d = real.w.block(rk1, rk2, rl2, rl1);
  return real;
}

double partial_isometry_defect(const TransferRealization& real) {
  const Mat& w = real.w;
  const Mat p_init = real.initial_basis * real.initial_basis.adjoint();
  const Mat p_fin = real.final_basis * real.final_basis.adjoint();
  return std::max({linalg::op_norm(w.adjoint() * w - p_init), linalg::op_norm(w * w.adjoint() - p_fin),
                   linalg::op_norm(w * w.adjoint() * w - w)});
}

double intertwining_residual(const TransferRealization& real) {
  return linalg::op_norm(real.w * real.g - real.f);
}

Mat transfer_denominator(const TransferRealization& real, std::string_view s) {
  return real.features.l2.feature(s) - real.d * real.features.l1.feature(s);
}

Mat transfer_function(const TransferRealization& real, std::string_view s, double tol) {
  const Mat m = transfer_denominator(real, s);
  const Index d = idx(real.features.k1.dim_h());
  const RealVec sv = linalg::singular_values(m);
  // full column rank needs at least d singular values
  if (m.rows() < d || sv.size() < d) throw NotInvertible(std::string(s), 0.0);
  const double smin = sv(d - 1);
  if (!(smin > tol * sv(0))) throw NotInvertible(std::string(s), smin);
  return real.a + real.b * real.features.l1.feature(s) * linalg::pinv(m, tol) * real.c;
}

double invertibility_ratio(const TransferRealization& real) {
  const Index d = idx(real.features.k1.dim_h());
  double worst = 1.0;
  for (const auto& s : real.features.k1.labels()) {
    const Mat m = transfer_denominator(real, s);
    const RealVec sv = linalg::singular_values(m);
    if (m.rows() < d || sv.size() < d || sv(0) == 0.0) return 0.0;
    worst = std::min(worst, sv(d - 1) / sv(0));
  }
  return worst;
}

RealizationReport verify_realization(const TransferRealization& real, const SignedKernelSystem& sys,
                                     double tol) {
  const FeatureSystem& v1 = real.features.k1;
  const FeatureSystem& v2 = real.features.k2;
  std::vector<Mat> transfer;
  transfer.reserve(v1.n());
  for (const auto& s : v1.labels()) transfer.push_back(transfer_function(real, s));

  RealizationReport report;
  report.scale = sys.scale();
  for (std::size_t i = 0; i < v1.n(); ++i) {
    report.feature_residual = std::max(
        report.feature_residual, linalg::op_norm(v1.feature(i) - transfer[i] * v2.feature(i)));
    for (std::size_t j = 0; j < v1.n(); ++j)
      report.kernel_residual =
          std::max(report.kernel_residual,
                   linalg::op_norm(sys.k1.block(i, j) -
                                   v1.feature(i).adjoint() * transfer[j] * v2.feature(j)));
  }
  report.ok = report.feature_residual <= tol * report.scale &&
              report.kernel_residual <= tol * report.scale;
  return report;
}

double transitive_action_angle(const SignedKernelSystem& sys, const TransferRealization& real) {
  const FeatureSystem& v1 = real.features.k1;
  const FeatureSystem& v2 = real.features.k2;
  const Index d = idx(sys.k1.dim_h());
  Mat image(idx(v1.dilation_dim()), idx(v1.n()) * d);
  for (std::size_t i = 0; i < v1.n(); ++i)
    image.middleCols(idx(i) * d, d) = transfer_function(real, v1.labels()[i]) * v2.feature(i);
  return linalg::max_principal_angle(linalg::range_basis(v1.stacked()),
                                     linalg::range_basis(image));
}

bool transitive_action_check(const SignedKernelSystem& sys, const TransferRealization& real,
                             double tol) {
  return transitive_action_angle(sys, real) <= tol;
}

RNDerivative radon_nikodym(const OperatorKernelTable& l, const OperatorKernelTable& k, double tol) {
  if (!kernel_leq(l, k)) throw NotDominated("L <= K fails: K - L is not positive definite");
  FeatureSystem basis = kolmogorov_factorize(k);
  const Mat v = basis.stacked();
  const Mat vp = linalg::pinv(v);
  Mat phi = linalg::hermitian_part(vp.adjoint() * flatten(l).flat * vp);

  RNDerivative rn{.basis = std::move(basis)};
  if (phi.rows() == 0) {
    rn.phi = phi;
    rn.sqrt_phi = phi;
    return rn;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(phi);
  rn.spectrum_min = eig.eigenvalues().minCoeff();
  rn.spectrum_max = eig.eigenvalues().maxCoeff();
  if (rn.spectrum_min < -tol || rn.spectrum_max > 1.0 + tol)
    throw SpectrumOutOfRange(rn.spectrum_min, rn.spectrum_max);
  const RealVec clamped = eig.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
  rn.phi = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().adjoint();
  rn.sqrt_phi = eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal() * eig.eigenvectors().adjoint();

  // <Phi^{1/2} V(s)a, Phi^{1/2} V(t)b> must reproduce <a, L(s,t) b>
  const Mat root_v = rn.sqrt_phi * v;
  const double residual = linalg::op_norm(root_v.adjoint() * root_v - l.gram());
  const double scale = std::max(k.scale(), l.scale());
  if (residual > tol * std::max(scale, 1.0))
    throw InternalInvariantViolation("Radon-Nikodym derivative does not reproduce L (residual " +
                                     std::to_string(residual) + ")");
  return rn;
}

RnTransferReport verify_rn_transfer_identity(const SignedKernelSystem& sys, double tol) {
  if (!kernel_leq(sys.k1, sys.k2)) throw NotDominated("K1 <= K2 fails");
  const RNDerivative rn = radon_nikodym(sys.k1, sys.k2);
  const FeatureSystem& v2 = rn.basis;

  RnTransferReport report;
  report.rn_min = rn.spectrum_min;
  report.rn_max = rn.spectrum_max;
  report.scale = sys.scale();

  // V_K1 realized inside H(K~2) as Phi^{1/2} V_K2
  std::vector<Mat> rooted;
  for (const Mat& v : v2.features()) rooted.push_back(rn.sqrt_phi * v);
  FeatureSystem v1 = FeatureSystem::from_features(sys.k1.labels(), sys.k1.dim_h(), rooted);
  SystemFeatures embedded{v1, v2, kolmogorov_factorize(sys.l1), kolmogorov_factorize(sys.l2)};
  const TransferRealization real = construct_partial_isometry(sys, embedded);
  for (std::size_t i = 0; i < v2.n(); ++i) {
    const Mat t12 = transfer_function(real, v2.labels()[i]);
    report.rn_vs_transfer =
        std::max(report.rn_vs_transfer, linalg::op_norm(rooted[i] - t12 * v2.feature(i)));
  }

  // minimal factorization of K1, carried into H(K~2) by J V_K1(s) = Phi^{1/2} V_K2(s)
  SystemFeatures minimal{kolmogorov_factorize(sys.k1), v2, embedded.l1, embedded.l2};
  const Mat v1_min = minimal.k1.stacked();
  const Mat j = v1.stacked() * linalg::pinv(v1_min);
  const TransferRealization real_min = construct_partial_isometry(sys, std::move(minimal));
  for (std::size_t i = 0; i < v2.n(); ++i) {
    const Mat t12 = transfer_function(real_min, v2.labels()[i]);
    report.rn_vs_transfer_minimal = std::max(
        report.rn_vs_transfer_minimal, linalg::op_norm(rooted[i] - j * t12 * v2.feature(i)));
  }

  report.ok = report.rn_vs_transfer <= tol * report.scale &&
              report.rn_vs_transfer_minimal <= tol * report.scale &&
              report.rn_min >= -1e-9 && report.rn_max <= 1.0 + 1e-9;
  return report;
}

}  // namespace opkern
