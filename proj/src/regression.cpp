#include "opkern/regression.hpp"

#include <algorithm>
#include <cmath>

namespace opkern {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

Mat tilde_gram(const OperatorKernelTable& k, const TrainingSet& train,
               const std::vector<std::size_t>& index) {
  const Index m = idx(train.size());
  Mat out(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      const auto& si = train.samples[static_cast<std::size_t>(i)];
      const auto& sj = train.samples[static_cast<std::size_t>(j)];
      out(i, j) = si.a.dot(k.block(index[static_cast<std::size_t>(i)],
                                   index[static_cast<std::size_t>(j)]) * sj.a);
    }
  return linalg::hermitian_part(out);
}

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

Spectrum hermitian_spectrum(const Mat& m) {
  if (m.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Mat> eig(linalg::hermitian_part(m), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

void check_psd(const Mat& gram, const char* name) {
  const Spectrum s = hermitian_spectrum(gram);
  const double scale = std::max(std::abs(s.min), std::abs(s.max));
  if (s.min < -kDefaultTol * scale)
    throw InternalInvariantViolation(std::string(name) + " design matrix is indefinite (min eig " +
                                     std::to_string(s.min) + ")");
}

}  // namespace

Vec TrainingSet::targets() const {
  Vec y(idx(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) y(idx(i)) = samples[i].y;
  return y;
}

DesignMatrices design_matrices(const OperatorKernelTable& k, const OperatorKernelTable& l,
                               const TrainingSet& train) {
  if (!k.same_shape(l)) throw ShapeError("K and L must share labels and dim_h");
  if (train.size() == 0) throw ShapeError("training set is empty");
  std::vector<std::size_t> index;
  for (const auto& s : train.samples) {
    index.push_back(k.labels().index_of(s.label));
    if (s.a.size() != idx(k.dim_h())) throw ShapeError("training vector a must have length d");
    if (!s.a.allFinite()) throw ShapeError("training vector a has non-finite entries");
  }
  DesignMatrices dm{tilde_gram(k, train, index), tilde_gram(l, train, index)};
  check_psd(dm.ktilde, "K~");
  check_psd(dm.ltilde, "L~");
  return dm;
}

RegressionFit krr_fit(const OperatorKernelTable& k, const DesignMatrices& dm,
                      const TrainingSet& train, const Vec& y, double tol) {
  if (y.size() != dm.ktilde.rows()) throw ShapeError("y must have one entry per sample");
  const Mat system = linalg::hermitian_part(dm.ltilde + dm.ktilde);
  const Spectrum s = hermitian_spectrum(system);
  if (!(s.min > tol * s.max))
    throw SingularSystem("[L~] + [K~] is singular (eigenvalues " + std::to_string(s.min) + " .. " +
                         std::to_string(s.max) + ")");
  RegressionFit fit{.training = train, .k = k};
  fit.coefficients = system.ldlt().solve(y);
  fit.fitted = dm.ktilde * fit.coefficients;
  return fit;
}

RegressionFit krr_fit(const OperatorKernelTable& k, const OperatorKernelTable& l,
                      const TrainingSet& train, double tol) {
  return krr_fit(k, design_matrices(k, l, train), train, train.targets(), tol);
}

cplx predict(const RegressionFit& fit, std::string_view s, const Vec& a) {
  const std::size_t si = fit.k.labels().index_of(s);
  if (a.size() != idx(fit.k.dim_h())) throw ShapeError("query vector must have length d");
  cplx out(0.0, 0.0);
  for (std::size_t i = 0; i < fit.training.size(); ++i) {
    const auto& sample = fit.training.samples[i];
    const std::size_t ti = fit.k.labels().index_of(sample.label);
    out += fit.coefficients(idx(i)) * a.dot(fit.k.block(si, ti) * sample.a);
  }
  return out;
}

double objective_value(const DesignMatrices& dm, const Vec& y, const Vec& g) {
  if (y.size() != dm.ktilde.rows() || g.size() != dm.ktilde.rows())
    throw ShapeError("y and g must have one entry per sample");
  const Spectrum s = hermitian_spectrum(dm.ltilde);
  if (!(s.min > kDefaultTol * s.max)) throw SingularL("[L~] is not invertible");
  const Vec residual = dm.ktilde * g - y;
  const cplx fit_term = residual.dot(dm.ltilde.ldlt().solve(residual));
  const cplx norm_term = g.dot(dm.ktilde * g);
  const cplx value = fit_term + norm_term;
  const double scale = std::max(1.0, std::abs(fit_term) + std::abs(norm_term));
  if (std::abs(value.imag()) > 1e-12 * scale)
    throw InternalInvariantViolation("objective has an imaginary part " +
                                     std::to_string(value.imag()));
  return value.real();
}

double objective_value(const OperatorKernelTable& k, const OperatorKernelTable& l,
                       const TrainingSet& train, const Vec& y, const Vec& g) {
  return objective_value(design_matrices(k, l, train), y, g);
}

Mat gp_posterior_mean(const OperatorKernelTable& k, const OperatorKernelTable& l,
                      const Mat& observed_y, double tol) {
  if (!k.same_shape(l)) throw ShapeError("K and L must share labels and dim_h");
  const Index n = idx(k.n());
  const Index d = idx(k.dim_h());
  if (observed_y.rows() != n || observed_y.cols() != d)
    throw ShapeError("observed Y must be n x d");
  const Mat system = linalg::hermitian_part(k.gram() + l.gram());
  const Spectrum s = hermitian_spectrum(system);
  if (!(s.min > tol * s.max)) throw SingularSystem("K + L is singular at Gram level");
  Vec y(n * d);
  for (Index i = 0; i < n; ++i)
    for (Index p = 0; p < d; ++p) y(i * d + p) = observed_y(i, p);
  const Vec mean = k.gram() * system.ldlt().solve(y);
  Mat out(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index p = 0; p < d; ++p) out(i, p) = mean(i * d + p);
  return out;
}

TrainingSet full_grid_training_set(const LabelSet& labels, const Mat& observed_y) {
  if (observed_y.rows() != idx(labels.size())) throw ShapeError("observed Y must be n x d");
  const Index d = observed_y.cols();
  TrainingSet train;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (Index p = 0; p < d; ++p)
      train.samples.push_back({labels[i], Vec::Unit(d, p), observed_y(idx(i), p)});
  return train;
}

}  // namespace opkern
