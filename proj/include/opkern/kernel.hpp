#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opkern/errors.hpp"
#include "opkern/linalg.hpp"

namespace opkern {

/// Default relative tolerance for positive-semidefiniteness and rank cutoffs.
inline constexpr double kDefaultTol = 1e-10;

/// Relative asymmetry tolerated (and symmetrized away) in kernel inputs.
inline constexpr double kHermitianTol = 1e-12;

/// Ordered finite index set S. The order is the canonical flattening order.
class LabelSet {
 public:
  explicit LabelSet(std::vector<std::string> labels);

  /// "s1", ..., "sn"
  static LabelSet numbered(std::size_t n);

  std::size_t size() const { return names_.size(); }
  const std::string& operator[](std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  auto begin() const { return names_.begin(); }
  auto end() const { return names_.end(); }

  bool contains(std::string_view label) const;
  /// Throws LabelError for unknown labels.
  std::size_t index_of(std::string_view label) const;

  bool operator==(const LabelSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// n x n table of d x d complex blocks over a LabelSet, stored flattened:
/// row index i*d + p addresses label i, basis vector e_p.
/// No symmetry is required; see OperatorKernelTable for kernels.
class BlockTable {
 public:
  static BlockTable from_blocks(LabelSet labels, std::size_t dim_h, const std::vector<Mat>& blocks);
  static BlockTable from_flat(LabelSet labels, std::size_t dim_h, Mat flat);
  static BlockTable zero(LabelSet labels, std::size_t dim_h);

  const LabelSet& labels() const { return labels_; }
  std::size_t n() const { return labels_.size(); }
  std::size_t dim_h() const { return dim_h_; }

  Mat block(std::size_t i, std::size_t j) const;
  Mat block(std::string_view s, std::string_view t) const;

  /// The (n*d) x (n*d) Gram-level matrix with blocks T(s_i, s_j).
  const Mat& gram() const { return flat_; }

  bool same_shape(const BlockTable& other) const {
    return dim_h_ == other.dim_h_ && labels_ == other.labels_;
  }

 protected:
  BlockTable(LabelSet labels, std::size_t dim_h, Mat flat);

  LabelSet labels_;
  std::size_t dim_h_;
  Mat flat_;
};

/// Gram form of a B(H)-valued kernel K: S x S -> B(C^d).
/// Invariant: blocks(j,i) = blocks(i,j)^* (inputs within kHermitianTol are
/// symmetrized, worse asymmetry is rejected); all entries finite.
class OperatorKernelTable : public BlockTable {
 public:
  static OperatorKernelTable from_blocks(LabelSet labels, std::size_t dim_h,
                                         const std::vector<Mat>& blocks);
  static OperatorKernelTable from_flat(LabelSet labels, std::size_t dim_h, Mat flat);
  static OperatorKernelTable zero(LabelSet labels, std::size_t dim_h);

  /// Spectral norm of the flattened Gram matrix.
  double scale() const;

  OperatorKernelTable operator+(const OperatorKernelTable& other) const;
  OperatorKernelTable operator-(const OperatorKernelTable& other) const;
  OperatorKernelTable scaled(double c) const;
  /// Blockwise T^* K(s,t) T for a fixed operator T on H.
  OperatorKernelTable congruence(const Mat& t) const;

 private:
  using BlockTable::BlockTable;
};

/// The scalar tilde-kernel on X = S x H restricted to the standard basis:
/// entry (i*d+p, j*d+q) = <e_p, K(s_i,s_j) e_q>.
struct ScalarKernelMatrix {
  Mat flat;
  std::size_t n = 0;
  std::size_t dim_h = 0;

  cplx entry(std::size_t i, std::size_t p, std::size_t j, std::size_t q) const {
    return flat(static_cast<Eigen::Index>(i * dim_h + p), static_cast<Eigen::Index>(j * dim_h + q));
  }
};

ScalarKernelMatrix flatten(const OperatorKernelTable& k);

struct PdReport {
  bool pd = false;
  double min_eig = 0.0;
  double threshold = 0.0;  ///< pd iff min_eig >= -threshold
};

/// pd iff lambda_min(flatten(K)) >= -rel_tol * scale, where scale defaults
/// to the spectral norm of the flattened kernel.
PdReport is_positive_definite(const OperatorKernelTable& k, double rel_tol = kDefaultTol,
                              std::optional<double> scale = std::nullopt);

/// L <= K, i.e. K - L is positive definite. The tolerance is relative to
/// max(|flat K|, |flat L|). Throws ShapeError on mismatched labels or d.
bool kernel_leq(const OperatorKernelTable& l, const OperatorKernelTable& k,
                double rel_tol = kDefaultTol);

/// Max over label pairs of the spectral norm of a block difference.
double max_block_residual(const BlockTable& a, const BlockTable& b);

}  // namespace opkern
