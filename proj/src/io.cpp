#include "opkern/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "opkern/builders.hpp"

namespace opkern::io {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw SpecError(std::string("missing field '") + name + "'");
  return j.at(name);
}

template <typename T>
T get(const json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad value for ") + what + ": " + e.what());
  }
}

std::vector<Mat> matrices_from_json(const json& j) {
  if (!j.is_array()) throw SpecError("expected an array of matrices");
  std::vector<Mat> out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

OperatorKernelTable relabel(const OperatorKernelTable& k, const LabelSet& labels) {
  return OperatorKernelTable::from_flat(labels, k.dim_h(), k.gram());
}

OperatorKernelTable build(const std::string& name, const json& params, const LabelSet& labels,
                          std::size_t dim_h) {
  OperatorKernelTable k = [&] {
    if (name == "identity") return identity_kernel(labels, dim_h);
    if (name == "constant") return constant_kernel(labels, matrix_from_json(field(params, "value")));
    if (name == "cp_contraction") {
      const auto points = matrices_from_json(field(params, "points"));
      return cp_contraction_kernel(matrix_from_json(field(params, "h")), labels, points);
    }
    if (name == "neumann_series") {
      const auto points = matrices_from_json(field(params, "points"));
      const double tol = params.contains("tol") ? get<double>(params.at("tol"), "tol") : 1e-12;
      return neumann_series_kernel(matrix_from_json(field(params, "h")), labels, points, tol);
    }
    if (name == "random_pd") {
      const auto seed = get<std::uint64_t>(field(params, "seed"), "seed");
      const auto rank = get<std::size_t>(field(params, "rank"), "rank");
      return relabel(random_pd_kernel(seed, labels.size(), dim_h, rank), labels);
    }
    throw SpecError("unknown builder '" + name + "'");
  }();
  if (k.dim_h() != dim_h) throw SpecError("builder output does not match dim_h");
  return k;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) throw SpecError("not a number: '" + cell + "'");
  return v;
}

}  // namespace

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

json to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

cplx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SpecError("complex numbers must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw SpecError("matrix must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(idx(rows), idx(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw SpecError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(idx(i), idx(c)) = complex_from_json(j[i][c]);
  }
  return m;
}

Vec vector_from_json(const json& j) {
  if (!j.is_array()) throw SpecError("vector must be an array of [re, im] pairs");
  Vec v(idx(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(idx(i)) = complex_from_json(j[i]);
  return v;
}

OperatorKernelTable kernel_from_spec(const json& spec) {
  const auto names = get<std::vector<std::string>>(field(spec, "labels"), "labels");
  const auto dim_h = get<std::size_t>(field(spec, "dim_h"), "dim_h");
  const auto kind = get<std::string>(field(spec, "kind"), "kind");
  if (dim_h == 0) throw SpecError("dim_h must be positive");
  LabelSet labels(names);
  if (kind == "explicit") {
    const json& rows = field(spec, "blocks");
    const BlockTable raw = block_table_from_json(rows, labels, dim_h);
    return OperatorKernelTable::from_flat(labels, dim_h, raw.gram());
  }
  if (kind == "builder") {
    const json& b = field(spec, "builder");
    const json params = b.contains("params") ? b.at("params") : json::object();
    return build(get<std::string>(field(b, "name"), "builder name"), params, labels, dim_h);
  }
  throw SpecError("kind must be 'explicit' or 'builder'");
}

json kernel_to_spec(const OperatorKernelTable& k) {
  return json{{"labels", k.labels().names()},
              {"dim_h", k.dim_h()},
              {"kind", "explicit"},
              {"blocks", blocks_to_json(k)}};
}

BlockTable block_table_from_json(const json& blocks, const LabelSet& labels, std::size_t dim_h) {
  const std::size_t n = labels.size();
  if (!blocks.is_array() || blocks.size() != n) throw SpecError("blocks must be an n x n array");
  std::vector<Mat> flat_blocks;
  for (const auto& row : blocks) {
    if (!row.is_array() || row.size() != n) throw SpecError("blocks must be an n x n array");
    for (const auto& b : row) {
      Mat m = matrix_from_json(b);
      if (m.rows() != idx(dim_h) || m.cols() != idx(dim_h)) throw SpecError("blocks must be d x d");
      flat_blocks.push_back(std::move(m));
    }
  }
  return BlockTable::from_blocks(labels, dim_h, flat_blocks);
}

json blocks_to_json(const BlockTable& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.n(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < t.n(); ++j) row.push_back(to_json(t.block(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json feature_system_to_json(const FeatureSystem& f) {
  json features = json::array();
  for (const Mat& v : f.features()) features.push_back(to_json(v));
  json eigs = json::array();
  for (Index i = 0; i < f.basis_eigs().size(); ++i) eigs.push_back(f.basis_eigs()(i));
  return json{{"labels", f.labels().names()},
              {"d", f.dim_h()},
              {"r", f.dilation_dim()},
              {"basis_eigs", eigs},
              {"features", features}};
}

SystemSpec system_from_json(const json& j) {
  return SystemSpec{kernel_from_spec(field(j, "K1")), kernel_from_spec(field(j, "K2")),
                    kernel_from_spec(field(j, "L1")), kernel_from_spec(field(j, "L2")),
                    matrix_from_json(field(j, "T"))};
}

JointSpec joint_from_json(const json& j) {
  OperatorKernelTable k = kernel_from_spec(field(j, "K"));
  OperatorKernelTable l = kernel_from_spec(field(j, "L"));
  BlockTable coupling = block_table_from_json(field(j, "T"), k.labels(), k.dim_h());
  std::optional<Mat> observed;
  if (j.contains("observed_L")) observed = matrix_from_json(j.at("observed_L"));
  return JointSpec{std::move(k), std::move(l), std::move(coupling), std::move(observed)};
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_paths_csv(std::ostream& out, const PathBatch& batch) {
  out << "sample,label,coordinate,re,im\n";
  for (std::size_t k = 0; k < batch.samples(); ++k)
    for (std::size_t i = 0; i < batch.n(); ++i)
      for (std::size_t p = 0; p < batch.dim_h(); ++p) {
        const cplx z = batch.at(k, i, p);
        out << batch.first_index() + k << ',' << batch.labels()[i] << ',' << p << ','
            << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
      }
}

TrainingSet read_training_csv(std::istream& in, std::size_t dim_h, bool with_targets) {
  std::string line;
  if (!std::getline(in, line)) throw SpecError("training CSV is empty");
  const std::size_t base = 1 + 2 * dim_h;
  const auto header = split(line);
  if (header.size() < base || header[0] != "label")
    throw SpecError("training CSV header must start with label,a_0_re,a_0_im,...");
  TrainingSet train;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() < base + (with_targets ? 2 : 0))
      throw SpecError("training CSV row " + std::to_string(row) + " has too few columns");
    TrainingSample s{cells[0], Vec(idx(dim_h)), cplx(0.0, 0.0)};
    for (std::size_t p = 0; p < dim_h; ++p)
      s.a(idx(p)) = cplx(parse_double(cells[1 + 2 * p]), parse_double(cells[2 + 2 * p]));
    if (with_targets) s.y = cplx(parse_double(cells[base]), parse_double(cells[base + 1]));
    train.samples.push_back(std::move(s));
  }
  return train;
}

void write_training_csv(std::ostream& out, const TrainingSet& train) {
  const std::size_t d = train.samples.empty() ? 0 : static_cast<std::size_t>(train.samples[0].a.size());
  out << "label";
  for (std::size_t p = 0; p < d; ++p) out << ",a_" << p << "_re,a_" << p << "_im";
  out << ",y_re,y_im\n";
  for (const auto& s : train.samples) {
    out << s.label;
    for (Index p = 0; p < s.a.size(); ++p)
      out << ',' << format_double(s.a(p).real()) << ',' << format_double(s.a(p).imag());
    out << ',' << format_double(s.y.real()) << ',' << format_double(s.y.imag()) << '\n';
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError("invalid JSON in '" + path + "': " + e.what());
  }
}

}  // namespace opkern::io
