#include "opkern/dilation.hpp"

#include <algorithm>
#include <cmath>

namespace opkern {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

}  // namespace

FeatureSystem::FeatureSystem(LabelSet labels, std::size_t dim_h, std::size_t r,
                             std::vector<Mat> features, RealVec basis_eigs)
    : labels_(std::move(labels)),
      dim_h_(dim_h),
      dilation_dim_(r),
      features_(std::move(features)),
      basis_eigs_(std::move(basis_eigs)) {}

FeatureSystem FeatureSystem::from_features(LabelSet labels, std::size_t dim_h,
                                           std::vector<Mat> features, RealVec basis_eigs) {
  if (features.size() != labels.size()) throw ShapeError("one feature operator per label");
  const Index r = features.empty() ? 0 : features.front().rows();
  for (const Mat& v : features) {
    if (v.rows() != r || v.cols() != idx(dim_h))
      throw ShapeError("feature operators must all be r x d");
    if (!v.allFinite()) throw InvalidKernel("feature operator has non-finite entries");
  }
  return FeatureSystem(std::move(labels), dim_h, static_cast<std::size_t>(r), std::move(features),
                       std::move(basis_eigs));
}

Mat FeatureSystem::stacked() const {
  const Index d = idx(dim_h_);
  Mat out(idx(dilation_dim_), idx(n()) * d);
  for (std::size_t i = 0; i < n(); ++i) out.middleCols(idx(i) * d, d) = features_[i];
  return out;
}

OperatorKernelTable FeatureSystem::gram() const {
  const Mat v = stacked();
  return OperatorKernelTable::from_flat(labels_, dim_h_, v.adjoint() * v);
}

FeatureSystem kolmogorov_factorize(const OperatorKernelTable& k, double tol) {
  const ScalarKernelMatrix flat = flatten(k);
  const auto eig = linalg::hermitian_eig(flat.flat);
  const Index size = eig.values.size();
  const double lmax = eig.values(0);
  const double lmin = eig.values(size - 1);
  const double scale = std::max(std::abs(lmax), std::abs(lmin));
  if (lmin < -tol * scale) throw NotPositiveDefinite("K", lmin);

  Index r = 0;
  while (r < size && eig.values(r) > tol * lmax && eig.values(r) > 0.0) ++r;

  const RealVec kept = eig.values.head(r);
  const Mat stacked = kept.cwiseSqrt().asDiagonal() * eig.vectors.leftCols(r).adjoint();
  const Index d = idx(k.dim_h());
  std::vector<Mat> features;
  features.reserve(k.n());
  for (std::size_t i = 0; i < k.n(); ++i) features.push_back(stacked.middleCols(idx(i) * d, d));
  return FeatureSystem::from_features(k.labels(), k.dim_h(), std::move(features), kept);
}

double reproduction_residual(const FeatureSystem& f, const OperatorKernelTable& k) {
  if (!(f.labels() == k.labels()) || f.dim_h() != k.dim_h())
    throw ShapeError("feature system and kernel shapes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < f.n(); ++i)
    for (std::size_t j = 0; j < f.n(); ++j)
      worst = std::max(
          worst, linalg::op_norm(f.feature(i).adjoint() * f.feature(j) - k.block(i, j)));
  return worst;
}

DilationVector embed(const FeatureSystem& f, std::string_view t, const Vec& b) {
  if (b.size() != idx(f.dim_h())) throw ShapeError("embed: vector must have length d");
  return DilationVector{f.feature(t) * b};
}

Vec adjoint_apply(const FeatureSystem& f, std::string_view s, const DilationVector& v) {
  if (v.coords.size() != idx(f.dilation_dim()))
    throw ShapeError("adjoint_apply: vector must have length r");
  return f.feature(s).adjoint() * v.coords;
}

bool is_unital(const FeatureSystem& f, double tol) {
  const Mat id = Mat::Identity(idx(f.dim_h()), idx(f.dim_h()));
  for (const Mat& v : f.features())
    if (linalg::op_norm(v.adjoint() * v - id) > tol) return false;
  return true;
}

DilationVector projection_chain(const FeatureSystem& f, std::span<const std::string> chain,
                                std::string_view t, const Vec& b) {
  DilationVector start = embed(f, t, b);
  Vec current = start.coords;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Mat& v = f.feature(*it);
    current = v * (v.adjoint() * current);
  }
  if (chain.empty()) return DilationVector{current};

  // closed form: embed(s_1, K(s_1,s_2) ... K(s_m,t) b)
  auto kernel_block = [&](std::string_view s, std::string_view u) -> Mat {
    return f.feature(s).adjoint() * f.feature(u);
  };
  Vec h = kernel_block(chain.back(), t) * b;
  for (std::size_t k = chain.size() - 1; k-- > 0;) h = kernel_block(chain[k], chain[k + 1]) * h;
  const Vec expected = f.feature(chain.front()) * h;

  const double feature_scale = std::max(1.0, linalg::op_norm(f.stacked()));
  const double scale = std::pow(feature_scale, 2.0 * static_cast<double>(chain.size()) + 1.0) *
                       std::max(1.0, b.norm());
  const double residual = (current - expected).norm();
  if (residual > 1e-9 * scale)
    throw InternalInvariantViolation("projection chain deviates from its closed form by " +
                                     std::to_string(residual));
  if (is_unital(f) && current.norm() > start.coords.norm() * (1.0 + 1e-9) + 1e-12)
    throw InternalInvariantViolation("projection chain on a unital kernel is not contractive");
  return DilationVector{current};
}

std::size_t minimal_dilation_dim(const OperatorKernelTable& k, double tol) {
  return kolmogorov_factorize(k, tol).dilation_dim();
}

}  // namespace opkern
