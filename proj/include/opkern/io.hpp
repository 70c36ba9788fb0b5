#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "opkern/dilation.hpp"
#include "opkern/gaussian.hpp"
#include "opkern/regression.hpp"
#include "opkern/transfer.hpp"

namespace opkern::io {

using nlohmann::json;

/// Malformed input documents (bad JSON shape, unknown builder, bad CSV).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Complex numbers are always [re, im] pairs; matrices are arrays of rows.
json to_json(cplx z);
json to_json(const Mat& m);
json to_json(const Vec& v);
cplx complex_from_json(const json& j);
Mat matrix_from_json(const json& j);
Vec vector_from_json(const json& j);

/// KernelSpec:
///   {"labels": [...], "dim_h": d, "kind": "explicit", "blocks": [[block, ...], ...]}
///   {"labels": [...], "dim_h": d, "kind": "builder", "builder": {"name": ..., "params": {...}}}
/// Builders: identity {}, constant {"value"}, cp_contraction {"h", "points"},
/// neumann_series {"h", "points", "tol"?}, random_pd {"seed", "rank"}.
OperatorKernelTable kernel_from_spec(const json& spec);
/// Explicit KernelSpec for a table.
json kernel_to_spec(const OperatorKernelTable& k);

/// n x n nested array of d x d blocks without any symmetry requirement.
BlockTable block_table_from_json(const json& blocks, const LabelSet& labels, std::size_t dim_h);
json blocks_to_json(const BlockTable& t);

json feature_system_to_json(const FeatureSystem& f);

/// {"K1": KernelSpec, "K2": ..., "L1": ..., "L2": ..., "T": matrix}
struct SystemSpec {
  OperatorKernelTable k1, k2, l1, l2;
  Mat t;
};
SystemSpec system_from_json(const json& j);

/// {"K": KernelSpec, "L": KernelSpec, "T": blocks, "observed_L": n x d matrix (optional)}
struct JointSpec {
  OperatorKernelTable k, l;
  BlockTable coupling;
  std::optional<Mat> observed_l;
};
JointSpec joint_from_json(const json& j);

/// sample,label,coordinate,re,im
void write_paths_csv(std::ostream& out, const PathBatch& batch);

/// label,a_0_re,a_0_im,...,a_{d-1}_re,a_{d-1}_im,y_re,y_im with a header row.
/// With with_targets = false the y columns are optional and ignored.
TrainingSet read_training_csv(std::istream& in, std::size_t dim_h, bool with_targets = true);
void write_training_csv(std::ostream& out, const TrainingSet& train);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

json read_json_file(const std::string& path);

}  // namespace opkern::io
