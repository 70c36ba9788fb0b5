#include "opkern/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace opkern {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void check_finite(const Mat& m) {
  if (!m.allFinite()) throw InvalidKernel("kernel contains non-finite entries");
}

}  // namespace

LabelSet::LabelSet(std::vector<std::string> labels) : names_(std::move(labels)) {
  if (names_.empty()) throw LabelError("label set must be non-empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second)
      throw LabelError("duplicate label '" + names_[i] + "'");
  }
}

LabelSet LabelSet::numbered(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) names.push_back("s" + std::to_string(i));
  return LabelSet(std::move(names));
}

bool LabelSet::contains(std::string_view label) const {
  return index_.contains(std::string(label));
}

std::size_t LabelSet::index_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) throw LabelError("unknown label '" + std::string(label) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

BlockTable::BlockTable(LabelSet labels, std::size_t dim_h, Mat flat)
    : labels_(std::move(labels)), dim_h_(dim_h), flat_(std::move(flat)) {
  if (dim_h_ == 0) throw ShapeError("dim_h must be positive");
  const Index size = idx(labels_.size() * dim_h_);
  if (flat_.rows() != size || flat_.cols() != size)
    throw ShapeError("flattened table must be (n*d) x (n*d)");
  check_finite(flat_);
}

BlockTable BlockTable::from_flat(LabelSet labels, std::size_t dim_h, Mat flat) {
  return BlockTable(std::move(labels), dim_h, std::move(flat));
}

BlockTable BlockTable::from_blocks(LabelSet labels, std::size_t dim_h,
                                   const std::vector<Mat>& blocks) {
  const std::size_t n = labels.size();
  if (blocks.size() != n * n) throw ShapeError("expected n*n blocks");
  const Index d = idx(dim_h);
  Mat flat(idx(n) * d, idx(n) * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Mat& b = blocks[i * n + j];
      if (b.rows() != d || b.cols() != d) throw ShapeError("every block must be d x d");
      flat.block(idx(i) * d, idx(j) * d, d, d) = b;
    }
  return BlockTable(std::move(labels), dim_h, std::move(flat));
}

BlockTable BlockTable::zero(LabelSet labels, std::size_t dim_h) {
  const Index size = idx(labels.size() * dim_h);
  return BlockTable(std::move(labels), dim_h, Mat::Zero(size, size));
}

Mat BlockTable::block(std::size_t i, std::size_t j) const {
  if (i >= n() || j >= n()) throw LabelError("label index out of range");
  const Index d = idx(dim_h_);
  return flat_.block(idx(i) * d, idx(j) * d, d, d);
}

Mat BlockTable::block(std::string_view s, std::string_view t) const {
  return block(labels_.index_of(s), labels_.index_of(t));
}

// ---------------------------------------------------------------------------

OperatorKernelTable OperatorKernelTable::from_flat(LabelSet labels, std::size_t dim_h, Mat flat) {
  check_finite(flat);
  const std::size_t n = labels.size();
  const Index d = idx(dim_h);
  if (flat.rows() != idx(n) * d || flat.cols() != idx(n) * d)
    throw ShapeError("flattened table must be (n*d) x (n*d)");
  double max_block = 0.0;
  double max_asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const Mat bij = flat.block(idx(i) * d, idx(j) * d, d, d);
      const Mat bji = flat.block(idx(j) * d, idx(i) * d, d, d);
      max_block = std::max({max_block, linalg::op_norm(bij), linalg::op_norm(bji)});
      max_asym = std::max(max_asym, linalg::op_norm(bji - bij.adjoint()));
    }
  if (max_asym > kHermitianTol * max_block)
    throw InvalidKernel("kernel blocks are not Hermitian-symmetric (asymmetry " +
                        std::to_string(max_asym) + ")");
  return OperatorKernelTable(std::move(labels), dim_h, linalg::hermitian_part(flat));
}

OperatorKernelTable OperatorKernelTable::from_blocks(LabelSet labels, std::size_t dim_h,
                                                     const std::vector<Mat>& blocks) {
  BlockTable raw = BlockTable::from_blocks(labels, dim_h, blocks);
  return from_flat(std::move(labels), dim_h, raw.gram());
}

OperatorKernelTable OperatorKernelTable::zero(LabelSet labels, std::size_t dim_h) {
  const Index size = idx(labels.size() * dim_h);
  return OperatorKernelTable(std::move(labels), dim_h, Mat::Zero(size, size));
}

double OperatorKernelTable::scale() const { return linalg::op_norm(flat_); }

OperatorKernelTable OperatorKernelTable::operator+(const OperatorKernelTable& other) const {
  if (!same_shape(other)) throw ShapeError("kernel shapes differ");
  return OperatorKernelTable(labels_, dim_h_, flat_ + other.flat_);
}

OperatorKernelTable OperatorKernelTable::operator-(const OperatorKernelTable& other) const {
  if (!same_shape(other)) throw ShapeError("kernel shapes differ");
  return OperatorKernelTable(labels_, dim_h_, flat_ - other.flat_);
}

OperatorKernelTable OperatorKernelTable::scaled(double c) const {
  return OperatorKernelTable(labels_, dim_h_, flat_ * c);
}

OperatorKernelTable OperatorKernelTable::congruence(const Mat& t) const {
  const Index d = idx(dim_h_);
  if (t.rows() != d || t.cols() != d) throw ShapeError("T must be d x d");
  Mat out(flat_.rows(), flat_.cols());
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = 0; j < n(); ++j)
      out.block(idx(i) * d, idx(j) * d, d, d) =
          t.adjoint() * flat_.block(idx(i) * d, idx(j) * d, d, d) * t;
  return OperatorKernelTable(labels_, dim_h_, linalg::hermitian_part(out));
}

// ---------------------------------------------------------------------------

ScalarKernelMatrix flatten(const OperatorKernelTable& k) {
  check_finite(k.gram());
  return ScalarKernelMatrix{linalg::hermitian_part(k.gram()), k.n(), k.dim_h()};
}

PdReport is_positive_definite(const OperatorKernelTable& k, double rel_tol,
                              std::optional<double> scale) {
  const ScalarKernelMatrix flat = flatten(k);
  const auto eig = linalg::hermitian_eig(flat.flat);
  const double norm = scale.value_or(
      eig.values.size() ? std::max(std::abs(eig.values(0)), std::abs(eig.values(eig.values.size() - 1)))
                        : 0.0);
  PdReport report;
  report.min_eig = eig.values.size() ? eig.values(eig.values.size() - 1) : 0.0;
  report.threshold = rel_tol * norm;
  report.pd = report.min_eig >= -report.threshold;
  return report;
}

bool kernel_leq(const OperatorKernelTable& l, const OperatorKernelTable& k, double rel_tol) {
  if (!l.same_shape(k)) throw ShapeError("kernel_leq: labels or dim_h differ");
  const double scale = std::max(l.scale(), k.scale());
  return is_positive_definite(k - l, rel_tol, scale).pd;
}

double max_block_residual(const BlockTable& a, const BlockTable& b) {
  if (!a.same_shape(b)) throw ShapeError("table shapes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t j = 0; j < a.n(); ++j)
      worst = std::max(worst, linalg::op_norm(a.block(i, j) - b.block(i, j)));
  return worst;
}

}  // namespace opkern
