#include "opkern/gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "opkern/rng.hpp"

namespace opkern {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

// Reductions are split into fixed chunks whose partial sums are added in
// chunk order, so results do not depend on the thread count.
constexpr std::size_t kChunk = 2048;

using ConstPaths = Eigen::Map<const Mat>;

ConstPaths as_columns(const PathBatch& b) {
  return ConstPaths(b.data().data(), idx(b.n() * b.dim_h()), idx(b.samples()));
}

Mat outer_sum_serial(const PathBatch& x, const PathBatch& y, std::size_t begin, std::size_t end) {
  Mat acc = Mat::Zero(idx(x.n() * x.dim_h()), idx(y.n() * y.dim_h()));
  for (std::size_t k = begin; k < end; ++k) acc.noalias() += x.path(k) * y.path(k).adjoint();
  return acc;
}

Mat outer_sum_parallel(const PathBatch& x, const PathBatch& y, std::size_t begin,
                       std::size_t end) {
  const ConstPaths xs = as_columns(x);
  const ConstPaths ys = as_columns(y);
  const std::size_t count = end - begin;
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  std::vector<Mat> partial(chunks);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = begin + c * kChunk;
    const Index width = idx(std::min(kChunk, end - lo));
    partial[c] = xs.middleCols(idx(lo), width) * ys.middleCols(idx(lo), width).adjoint();
  }
  Mat acc = Mat::Zero(xs.rows(), ys.rows());
  for (const Mat& p : partial) acc += p;
  return acc;
}

Mat outer_sum(const PathBatch& x, const PathBatch& y, std::size_t begin, std::size_t end,
              Execution exec) {
  return exec == Execution::kSerial ? outer_sum_serial(x, y, begin, end)
                                    : outer_sum_parallel(x, y, begin, end);
}

void check_pair(const PathBatch& x, const PathBatch& y) {
  if (x.samples() != y.samples()) throw ShapeError("batches must have the same sample count");
  if (x.samples() == 0) throw ShapeError("empty path batch");
}

/// Label-major vec of an n x d array.
Vec vec_of(const Mat& rows) {
  Vec out(rows.size());
  for (Index i = 0; i < rows.rows(); ++i)
    for (Index p = 0; p < rows.cols(); ++p) out(i * rows.cols() + p) = rows(i, p);
  return out;
}

Mat unvec(const Vec& v, Index n, Index d) {
  Mat out(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index p = 0; p < d; ++p) out(i, p) = v(i * d + p);
  return out;
}

struct GramInverse {
  Mat inverse;
  std::size_t null_dim = 0;
};

/// Inverse of a Hermitian PSD Gram matrix; null_dim counts dropped eigenvalues.
GramInverse gram_inverse(const Mat& gram, double tol) {
  const auto eig = linalg::hermitian_eig(gram);
  GramInverse out;
  out.inverse = Mat::Zero(gram.rows(), gram.cols());
  if (gram.rows() == 0) return out;
  const double cut = tol * std::max(std::abs(eig.values(0)), 0.0);
  for (Index k = 0; k < eig.values.size(); ++k) {
    if (eig.values(k) > cut && eig.values(k) > 0.0)
      out.inverse += eig.vectors.col(k) * (1.0 / eig.values(k)) * eig.vectors.col(k).adjoint();
    else
      ++out.null_dim;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

PathBatch::PathBatch(LabelSet labels, std::size_t dim_h, std::size_t samples, std::uint64_t seed,
                     std::uint64_t first_index)
    : labels_(std::move(labels)),
      dim_h_(dim_h),
      samples_(samples),
      seed_(seed),
      first_index_(first_index),
      data_(samples * labels_.size() * dim_h, cplx(0.0, 0.0)) {}

Eigen::Map<const Vec> PathBatch::path(std::size_t k) const {
  return Eigen::Map<const Vec>(data_.data() + offset(k, 0, 0), idx(n() * dim_h_));
}

Eigen::Map<Vec> PathBatch::path(std::size_t k) {
  return Eigen::Map<Vec>(data_.data() + offset(k, 0, 0), idx(n() * dim_h_));
}

PathBatch PathBatch::concat(const PathBatch& a, const PathBatch& b) {
  if (!(a.labels_ == b.labels_) || a.dim_h_ != b.dim_h_ || a.seed_ != b.seed_)
    throw ShapeError("only batches of the same stream can be concatenated");
  if (b.first_index_ != a.first_index_ + a.samples_)
    throw ShapeError("second batch must continue the first one's index range");
  PathBatch out(a.labels_, a.dim_h_, a.samples_ + b.samples_, a.seed_, a.first_index_);
  std::copy(a.data_.begin(), a.data_.end(), out.data_.begin());
  std::copy(b.data_.begin(), b.data_.end(), out.data_.begin() + static_cast<long>(a.data_.size()));
  return out;
}

// ---------------------------------------------------------------------------

GaussianSampler::GaussianSampler(FeatureSystem features, std::uint64_t seed)
    : features_(std::move(features)), adjoint_(features_.stacked().adjoint()), seed_(seed) {}

Vec GaussianSampler::draw(std::uint64_t index) const {
  const Index r = adjoint_.cols();
  RealVec z(r);
  for (Index i = 0; i < r; ++i)
    z(i) = rng::normal(seed_, rng::kPathStream, index, static_cast<std::uint64_t>(i));
  return adjoint_ * z.cast<cplx>();
}

PathBatch GaussianSampler::sample(std::uint64_t first, std::size_t count, Execution exec) const {
  PathBatch batch(features_.labels(), features_.dim_h(), count, seed_, first);
  if (exec == Execution::kSerial) {
    for (std::size_t k = 0; k < count; ++k) batch.path(k) = draw(first + k);
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < count; ++k) batch.path(k) = draw(first + k);
  }
  return batch;
}

PathBatch GaussianSampler::next(std::size_t count, Execution exec) {
  PathBatch batch = sample(counter_, count, exec);
  counter_ += count;
  return batch;
}

GaussianSampler make_sampler(const OperatorKernelTable& k, std::uint64_t seed, double tol) {
  return GaussianSampler(kolmogorov_factorize(k, tol), seed);
}

OperatorKernelTable empirical_covariance(const PathBatch& batch, Execution exec) {
  check_pair(batch, batch);
  Mat acc = outer_sum(batch, batch, 0, batch.samples(), exec);
  acc /= static_cast<double>(batch.samples());
  return OperatorKernelTable::from_flat(batch.labels(), batch.dim_h(), linalg::hermitian_part(acc));
}

Mat empirical_cross_covariance(const PathBatch& x, const PathBatch& y, Execution exec) {
  check_pair(x, y);
  return outer_sum(x, y, 0, x.samples(), exec) / static_cast<double>(x.samples());
}

// ---------------------------------------------------------------------------

JointKernel assemble_joint(const OperatorKernelTable& k, const OperatorKernelTable& l,
                           const BlockTable& coupling, double tol) {
  if (!k.same_shape(l) || !k.same_shape(coupling))
    throw ShapeError("K, L and the coupling must share labels and dim_h");
  for (const auto& [name, kernel] : {std::pair{"K", &k}, std::pair{"L", &l}}) {
    const PdReport pd = is_positive_definite(*kernel, tol);
    if (!pd.pd) throw NotPositiveDefinite(name, pd.min_eig);
  }
  const std::size_t n = k.n();
  const Index d = idx(k.dim_h());
  Mat flat(idx(n) * 2 * d, idx(n) * 2 * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto block = flat.block(idx(i) * 2 * d, idx(j) * 2 * d, 2 * d, 2 * d);
      block.topLeftCorner(d, d) = k.block(i, j);
      block.topRightCorner(d, d) = coupling.block(i, j);
      block.bottomLeftCorner(d, d) = coupling.block(j, i).adjoint();
      block.bottomRightCorner(d, d) = l.block(i, j);
    }
  OperatorKernelTable m = OperatorKernelTable::from_flat(k.labels(), 2 * k.dim_h(), flat);

  JointKernel joint{k, l, coupling, std::move(m)};
  const PdReport m_pd = is_positive_definite(joint.m, tol);
  joint.m_min_eig = m_pd.min_eig;
  if (!m_pd.pd) throw NotPositiveDefinite("M", m_pd.min_eig);

  const Mat& t = coupling.gram();
  joint.schur_gram = linalg::hermitian_part(k.gram() - t * linalg::pinv(l.gram(), tol) * t.adjoint());
  joint.schur_min_eig = linalg::min_eigenvalue(joint.schur_gram);
  const double scale = std::max(joint.m.scale(), linalg::op_norm(joint.schur_gram));
  if (joint.schur_min_eig < -tol * scale) throw NotPositiveDefinite("M/L", joint.schur_min_eig);
  return joint;
}

JointKernel joint_from_table(const OperatorKernelTable& m, double tol) {
  if (m.dim_h() % 2 != 0) throw ShapeError("joint kernel needs an even H+H dimension");
  const std::size_t d = m.dim_h() / 2;
  const Index di = idx(d);
  std::vector<Mat> kb, lb, tb;
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = 0; j < m.n(); ++j) {
      const Mat b = m.block(i, j);
      kb.push_back(b.topLeftCorner(di, di));
      tb.push_back(b.topRightCorner(di, di));
      lb.push_back(b.bottomRightCorner(di, di));
    }
  return assemble_joint(OperatorKernelTable::from_blocks(m.labels(), d, kb),
                        OperatorKernelTable::from_blocks(m.labels(), d, lb),
                        BlockTable::from_blocks(m.labels(), d, tb), tol);
}

std::pair<PathBatch, PathBatch> sample_joint(const JointKernel& joint, std::uint64_t seed,
                                             std::size_t samples, Execution exec) {
  const GaussianSampler sampler = make_sampler(joint.m, seed);
  const PathBatch both = sampler.sample(0, samples, exec);
  const std::size_t n = joint.k.n();
  const std::size_t d = joint.k.dim_h();
  PathBatch k_part(joint.k.labels(), d, samples, seed, 0);
  PathBatch l_part(joint.k.labels(), d, samples, seed, 0);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < d; ++p) {
        k_part.at(s, i, p) = both.at(s, i, p);
        l_part.at(s, i, p) = both.at(s, i, d + p);
      }
  return {std::move(k_part), std::move(l_part)};
}

ConditionalLaw condition(const JointKernel& joint, const Mat& observed_l, double tol,
                         bool allow_pseudo_inverse) {
  const Index n = idx(joint.k.n());
  const Index d = idx(joint.k.dim_h());
  if (observed_l.rows() != n || observed_l.cols() != d)
    throw ShapeError("observed L-path must be n x d");
  const GramInverse inv = gram_inverse(joint.l.gram(), tol);
  if (inv.null_dim > 0 && !allow_pseudo_inverse)
    throw SingularL("L Gram matrix is singular (null space dimension " +
                    std::to_string(inv.null_dim) + ")");
  const Mat& t = joint.coupling.gram();
  ConditionalLaw law{.mean_map = t * inv.inverse,
                     .cond_cov = OperatorKernelTable::zero(joint.k.labels(), joint.k.dim_h())};
  law.mean = unvec(law.mean_map * vec_of(observed_l), n, d);
  law.cond_cov = OperatorKernelTable::from_flat(
      joint.k.labels(), joint.k.dim_h(),
      linalg::hermitian_part(joint.k.gram() - law.mean_map * t.adjoint()));
  law.null_space_dim = inv.null_dim;
  return law;
}

Mat pointwise_conditional_mean(const JointKernel& joint, const Mat& observed_l) {
  const Index d = idx(joint.k.dim_h());
  Mat out(observed_l.rows(), d);
  for (std::size_t i = 0; i < joint.k.n(); ++i) {
    const Vec w = observed_l.row(idx(i)).transpose();
    out.row(idx(i)) = (joint.coupling.block(i, i) * linalg::pinv(joint.l.block(i, i)) * w).transpose();
  }
  return out;
}

CovEqualReport conditional_cov_equal(const OperatorKernelTable& k1, const OperatorKernelTable& k2,
                                     const OperatorKernelTable& l1, const OperatorKernelTable& l2,
                                     const BlockTable& coupling, double tol) {
  if (!k1.same_shape(k2) || !k1.same_shape(l1) || !k1.same_shape(l2) || !k1.same_shape(coupling))
    throw ShapeError("all kernels and the coupling must share labels and dim_h");
  const Mat& t = coupling.gram();
  auto reduced = [&](const OperatorKernelTable& l, const char* name) {
    const GramInverse inv = gram_inverse(l.gram(), tol);
    if (inv.null_dim > 0) throw SingularL(std::string(name) + " Gram matrix is singular");
    return Mat(t * inv.inverse * t.adjoint());
  };
  const Mat r1 = reduced(l1, "L1");
  const Mat r2 = reduced(l2, "L2");
  const Mat s1 = linalg::hermitian_part(k1.gram() - r1);
  const Mat s2 = linalg::hermitian_part(k2.gram() - r2);

  CovEqualReport report;
  report.residual = linalg::op_norm(s1 - s2);
  report.scale = std::max({k1.scale(), k2.scale(), linalg::op_norm(r1), linalg::op_norm(r2)});
  report.equal = report.residual <= tol * report.scale;
  const double common_scale = std::max(linalg::op_norm(s1), linalg::op_norm(s2));
  report.common_pd = linalg::min_eigenvalue(s1) >= -tol * std::max(common_scale, report.scale);
  return report;
}

McConditionalReport mc_verify_conditional(const JointKernel& joint, std::uint64_t seed,
                                          std::size_t samples, double tol_sigma, Execution exec) {
  constexpr std::size_t kBatches = 50;
  if (samples < 2 * kBatches) throw ShapeError("mc_verify_conditional needs at least 100 samples");
  const auto [y, x] = sample_joint(joint, seed, samples, exec);

  const ConditionalLaw law = condition(joint, Mat::Zero(idx(joint.k.n()), idx(joint.k.dim_h())),
                                       kDefaultTol, /*allow_pseudo_inverse=*/true);
  const Mat range = linalg::range_basis(joint.l.gram());
  const Mat proj = range * range.adjoint();

  McConditionalReport report;
  report.samples = samples;
  report.mean_map_truth = law.mean_map * proj;
  report.cond_cov_truth = law.cond_cov.gram();

  auto estimate = [&](const Mat& sxx, const Mat& syx, const Mat& syy) {
    const Mat sxx_inv = linalg::pinv(linalg::hermitian_part(sxx));
    return std::pair<Mat, Mat>{syx * sxx_inv * proj,
                               linalg::hermitian_part(syy - syx * sxx_inv * syx.adjoint())};
  };

  std::vector<Mat> batch_means, batch_covs;
  Mat sxx_total = Mat::Zero(x.path(0).size(), x.path(0).size());
  Mat syx_total = sxx_total, syy_total = sxx_total;
  for (std::size_t b = 0; b < kBatches; ++b) {
    const std::size_t lo = b * samples / kBatches;
    const std::size_t hi = (b + 1) * samples / kBatches;
    const double count = static_cast<double>(hi - lo);
    const Mat sxx = outer_sum(x, x, lo, hi, exec);
    const Mat syx = outer_sum(y, x, lo, hi, exec);
    const Mat syy = outer_sum(y, y, lo, hi, exec);
    sxx_total += sxx;
    syx_total += syx;
    syy_total += syy;
    auto [mean_b, cov_b] = estimate(sxx / count, syx / count, syy / count);
    batch_means.push_back(std::move(mean_b));
    batch_covs.push_back(std::move(cov_b));
  }
  const double total = static_cast<double>(samples);
  std::tie(report.mean_map_estimate, report.cond_cov_estimate) =
      estimate(sxx_total / total, syx_total / total, syy_total / total);

  // worst |estimate - truth| / SE over real and imaginary parts of every entry
  auto max_z = [&](const Mat& est, const Mat& truth, const std::vector<Mat>& batches) {
    const double floor = 1e-12 * std::max(1.0, linalg::op_norm(truth));
    const double nb = static_cast<double>(batches.size());
    double worst = 0.0;
    for (Index i = 0; i < est.rows(); ++i)
      for (Index j = 0; j < est.cols(); ++j)
        for (int part = 0; part < 2; ++part) {
          auto component = [&](const cplx& z) { return part == 0 ? z.real() : z.imag(); };
          double mean = 0.0;
          for (const Mat& m : batches) mean += component(m(i, j));
          mean /= nb;
          double var = 0.0;
          for (const Mat& m : batches) var += std::pow(component(m(i, j)) - mean, 2);
          const double se = std::sqrt(var / (nb - 1.0) / nb);
          const double dev = std::abs(component(est(i, j)) - component(truth(i, j)));
          worst = std::max(worst, dev / std::max(se, floor));
        }
    return worst;
  };
  report.mean_map_max_z = max_z(report.mean_map_estimate, report.mean_map_truth, batch_means);
  report.cond_cov_max_z = max_z(report.cond_cov_estimate, report.cond_cov_truth, batch_covs);
  report.pass = report.mean_map_max_z <= tol_sigma && report.cond_cov_max_z <= tol_sigma;
  return report;
}

}  // namespace opkern
