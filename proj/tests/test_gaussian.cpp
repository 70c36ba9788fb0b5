#include <doctest.h>

#include <cmath>

#include "opkern/builders.hpp"
#include "opkern/errors.hpp"
#include "opkern/gaussian.hpp"
#include "opkern/rng.hpp"
#include "oracles.hpp"

using namespace opkern;

namespace {

OperatorKernelTable scalar_kernel(double x) {
  return OperatorKernelTable::from_flat(LabelSet::numbered(1), 1, Mat::Constant(1, 1, cplx(x, 0.0)));
}

BlockTable scalar_coupling(double t) {
  return BlockTable::from_flat(LabelSet::numbered(1), 1, Mat::Constant(1, 1, cplx(t, 0.0)));
}

Mat scalar_obs(double w) { return Mat::Constant(1, 1, cplx(w, 0.0)); }

// Flattened H+H valued kernel built entry by entry from K, L and T.
Mat joint_flat_oracle(const OperatorKernelTable& k, const OperatorKernelTable& l, const BlockTable& t) {
  const std::size_t n = k.n(), d = k.dim_h(), w = 2 * d;
  Mat m(static_cast<Eigen::Index>(n * w), static_cast<Eigen::Index>(n * w));
  auto at = [&](std::size_t i, std::size_t p, std::size_t j, std::size_t q) -> cplx& {
    return m(static_cast<Eigen::Index>(i * w + p), static_cast<Eigen::Index>(j * w + q));
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Mat kb = k.block(i, j), lb = l.block(i, j), tb = t.block(i, j), tr = t.block(j, i);
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q) {
          const auto P = static_cast<Eigen::Index>(p), Q = static_cast<Eigen::Index>(q);
          at(i, p, j, q) = kb(P, Q);
          at(i, p, j, d + q) = tb(P, Q);
          at(i, d + p, j, q) = std::conj(tr(Q, P));
          at(i, d + p, j, d + q) = lb(P, Q);
        }
    }
  return m;
}

// A coupling that keeps M p.d.: K^{1/2} C L^{1/2} with |C| < 1.
BlockTable admissible_coupling(const OperatorKernelTable& k, const OperatorKernelTable& l,
                               std::uint64_t seed, double norm) {
  const Eigen::Index nd = k.gram().rows();
  Mat c = random_complex_matrix(seed, 30, nd, nd);
  c *= norm / linalg::op_norm(c);
  return BlockTable::from_flat(k.labels(), k.dim_h(),
                               linalg::sqrt_psd(k.gram()) * c * linalg::sqrt_psd(l.gram()));
}

double rel_frobenius(const Mat& est, const Mat& truth) { return (est - truth).norm() / truth.norm(); }

}  // namespace

TEST_CASE("sampler draws are reproducible") {
  const auto s1 = make_sampler(scalar_kernel(1.0), 42);
  const auto s2 = make_sampler(scalar_kernel(1.0), 42);
  CHECK(s1.draw(0)(0) == s2.draw(0)(0));
  CHECK(s1.draw(17)(0) == s2.draw(17)(0));
  CHECK(s1.draw(0)(0) != s1.draw(1)(0));
  CHECK(make_sampler(scalar_kernel(1.0), 43).draw(0)(0) != s1.draw(0)(0));
}

TEST_CASE("zero-rank kernels give zero paths") {
  const auto sampler = make_sampler(OperatorKernelTable::zero(LabelSet::numbered(2), 2), 1);
  const auto batch = sampler.sample(0, 10);
  for (const cplx& z : batch.data()) CHECK(z == cplx(0.0, 0.0));
}

TEST_CASE("make_sampler rejects indefinite kernels") {
  CHECK_THROWS_AS(make_sampler(scalar_kernel(-1.0), 0), NotPositiveDefinite);
}

TEST_CASE("scalar variance concentrates") {
  const std::size_t n = 100000;
  const auto batch = make_sampler(scalar_kernel(4.0), 3).sample(0, n);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) var += std::norm(batch.at(k, 0, 0));
  var /= static_cast<double>(n);
  // var of the estimator of sigma^2 is 2 sigma^4 / N
  CHECK(std::abs(var - 4.0) <= 4.0 * 5.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("a single path gives rank-one covariance blocks") {
  const auto k = random_pd_kernel(2, 2, 2, 3);
  const auto batch = make_sampler(k, 5).sample(0, 1);
  const auto cov = empirical_covariance(batch);
  const Vec w = batch.path(0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const Vec a = w.segment(static_cast<Eigen::Index>(2 * i), 2), b = w.segment(static_cast<Eigen::Index>(2 * j), 2);
      CHECK(oracle::max_abs_diff(cov.block(i, j), a * b.adjoint()) < 1e-14);
    }
}

TEST_CASE("empirical covariance converges") {
  const std::size_t n = 200000;
  const auto id = identity_kernel(LabelSet::numbered(1), 2);
  const auto est = empirical_covariance(make_sampler(id, 11).sample(0, n));
  CHECK(linalg::op_norm(est.gram() - Mat::Identity(2, 2)) <= 0.03);

  const auto k = random_pd_kernel(12, 3, 2, 6);
  const auto est2 = empirical_covariance(make_sampler(k, 12).sample(0, n));
  CHECK(rel_frobenius(est2.gram(), k.gram()) <= 0.02);
}

TEST_CASE("serial and parallel kernels agree") {
  const auto k = random_pd_kernel(4, 3, 2, 5);
  const auto sampler = make_sampler(k, 9);
  const auto par = sampler.sample(0, 5000, Execution::kParallel);
  const auto ser = sampler.sample(0, 5000, Execution::kSerial);
  CHECK(par.data() == ser.data());
  const auto cp = empirical_covariance(par, Execution::kParallel);
  const auto cs = empirical_covariance(ser, Execution::kSerial);
  CHECK(oracle::max_abs_diff(cp.gram(), cs.gram()) <= 1e-12 * k.scale());
  CHECK(oracle::max_abs_diff(empirical_cross_covariance(par, par, Execution::kParallel),
                             empirical_cross_covariance(ser, ser, Execution::kSerial)) <= 1e-12 * k.scale());
}

TEST_CASE("batches concatenate along the counter") {
  const auto k = random_pd_kernel(6, 2, 2, 4);
  auto sampler = make_sampler(k, 17);
  const auto a = sampler.next(300);
  const auto b = sampler.next(300);
  CHECK(sampler.counter() == 600);
  const auto joined = PathBatch::concat(a, b);
  const auto whole = make_sampler(k, 17).sample(0, 600);
  CHECK(joined.data() == whole.data());
  CHECK_THROWS_AS(PathBatch::concat(b, a), ShapeError);
}

TEST_CASE("assembling joint kernels") {
  const auto indep = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0));
  CHECK(indep.schur_min_eig == doctest::Approx(1.0));

  const auto half = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0.5));
  Mat expect(2, 2);
  expect << 1.0, 0.5, 0.5, 1.0;
  CHECK(oracle::max_abs_diff(half.m.gram(), expect) < 1e-15);
  CHECK(half.schur_min_eig == doctest::Approx(0.75));

  try {
    assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(2.0));
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.which() == "M");
  }
}

TEST_CASE("joint acceptance matches brute-force positivity of M") {
  int accepted = 0, rejected = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t n = 1 + seed % 3, d = 1 + seed % 4;
    if (2 * n * d > 24) continue;
    const auto k = random_pd_kernel(seed, n, d, n * d);
    const auto l = random_pd_kernel(seed + 500, n, d, n * d);
    const double size = 0.2 + 0.1 * static_cast<double>(seed % 20);
    const Mat raw = random_complex_matrix(seed, 31, static_cast<Eigen::Index>(n * d), static_cast<Eigen::Index>(n * d));
    const auto t = BlockTable::from_flat(k.labels(), d,
                                         raw * (size * std::sqrt(k.scale() * l.scale()) / linalg::op_norm(raw)));
    const Mat m = joint_flat_oracle(k, l, t);
    const auto eigs = oracle::hermitian_eigenvalues(m);
    const double scale = std::max(std::abs(eigs.front()), std::abs(eigs.back()));
    const bool oracle_pd = eigs.front() >= -kDefaultTol * scale;
    bool ok = true;
    try {
      const auto joint = assemble_joint(k, l, t);
      CHECK(oracle::max_abs_diff(joint.m.gram(), m) < 1e-13 * scale);
    } catch (const NotPositiveDefinite&) {
      ok = false;
    }
    CHECK(ok == oracle_pd);
    (ok ? accepted : rejected) += 1;
  }
  CHECK(accepted > 0);
  CHECK(rejected > 0);
}

TEST_CASE("joint kernels split back into K, L and T") {
  const auto k = random_pd_kernel(3, 2, 2, 4), l = random_pd_kernel(4, 2, 2, 4);
  const auto t = admissible_coupling(k, l, 3, 0.5);
  const auto joint = assemble_joint(k, l, t);
  const auto again = joint_from_table(joint.m);
  CHECK(oracle::max_abs_diff(again.k.gram(), k.gram()) < 1e-14);
  CHECK(oracle::max_abs_diff(again.l.gram(), l.gram()) < 1e-14);
  CHECK(oracle::max_abs_diff(again.coupling.gram(), t.gram()) < 1e-14);
}

TEST_CASE("joint samples have the prescribed cross-covariance") {
  const std::size_t n = 200000;
  {
    const auto joint = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0));
    const auto [wk, wl] = sample_joint(joint, 1, n);
    CHECK(std::abs(empirical_cross_covariance(wk, wl)(0, 0)) <= 0.012);
  }
  {
    const auto joint = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0.5));
    const auto [wk, wl] = sample_joint(joint, 2, n);
    CHECK(std::abs(empirical_cross_covariance(wk, wl)(0, 0) - 0.5) <= 0.012);
  }
  {
    const auto k = random_pd_kernel(8, 2, 2, 4), l = random_pd_kernel(9, 2, 2, 4);
    const auto joint = assemble_joint(k, l, admissible_coupling(k, l, 8, 0.6));
    const auto [wk, wl] = sample_joint(joint, 3, n);
    CHECK(rel_frobenius(empirical_covariance(wk).gram(), k.gram()) <= 0.02);
    CHECK(rel_frobenius(empirical_covariance(wl).gram(), l.gram()) <= 0.02);
  }
}

TEST_CASE("conditioning on the L-path") {
  const auto half = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0.5));
  const auto law = condition(half, scalar_obs(2.0));
  CHECK(std::abs(law.mean(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(law.mean_map(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(law.cond_cov.block(0, 0)(0, 0) - 0.75) < 1e-12);
  CHECK(condition(half, scalar_obs(0.0)).mean.norm() == 0.0);

  const auto k = random_pd_kernel(1, 2, 2, 4), l = random_pd_kernel(2, 2, 2, 4);
  const auto indep = assemble_joint(k, l, BlockTable::zero(k.labels(), 2));
  const Mat obs = random_complex_matrix(3, 32, 2, 2);
  const auto law0 = condition(indep, obs);
  CHECK(law0.mean.norm() == 0.0);
  CHECK(oracle::max_abs_diff(law0.cond_cov.gram(), k.gram()) < 1e-14);
  CHECK_THROWS_AS(condition(indep, Mat::Zero(3, 2)), ShapeError);
}

TEST_CASE("singular L is rejected or handled on its range") {
  const auto k = random_pd_kernel(1, 2, 2, 4), l = random_pd_kernel(2, 2, 2, 2);
  const auto joint = assemble_joint(k, l, admissible_coupling(k, l, 5, 0.5));
  CHECK_THROWS_AS(condition(joint, Mat::Zero(2, 2)), SingularL);
  const auto law = condition(joint, Mat::Zero(2, 2), kDefaultTol, true);
  CHECK(law.null_space_dim == 2);
  CHECK(is_positive_definite(law.cond_cov).pd);
}

TEST_CASE("pointwise and full-grid conditional means agree for block-diagonal couplings") {
  const std::size_t n = 3, d = 2;
  std::vector<Mat> kb, lb, tb;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        kb.push_back(Mat::Zero(2, 2));
        lb.push_back(Mat::Zero(2, 2));
        tb.push_back(Mat::Zero(2, 2));
        continue;
      }
      const Mat g = random_complex_matrix(i, 33, 2, 2), h = random_complex_matrix(i, 34, 2, 2);
      const Mat kk = g.adjoint() * g + Mat::Identity(2, 2), ll = h.adjoint() * h + Mat::Identity(2, 2);
      kb.push_back(kk);
      lb.push_back(ll);
      Mat c = random_complex_matrix(i, 35, 2, 2);
      c *= 0.5 / linalg::op_norm(c);
      tb.push_back(linalg::sqrt_psd(kk) * c * linalg::sqrt_psd(ll));
    }
  const LabelSet labels = LabelSet::numbered(n);
  const auto joint = assemble_joint(OperatorKernelTable::from_blocks(labels, d, kb),
                                    OperatorKernelTable::from_blocks(labels, d, lb),
                                    BlockTable::from_blocks(labels, d, tb));
  const Mat obs = random_complex_matrix(7, 36, 3, 2);
  CHECK(oracle::max_abs_diff(pointwise_conditional_mean(joint, obs), condition(joint, obs).mean) < 1e-12);
}

TEST_CASE("conditional covariance equality") {
  const auto k = random_pd_kernel(1, 2, 2, 4), l = random_pd_kernel(2, 2, 2, 4);
  const auto t = admissible_coupling(k, l, 3, 0.5);
  CHECK(conditional_cov_equal(k, k, l, l, t).equal);

  const auto one = scalar_coupling(1.0);
  const auto neq = conditional_cov_equal(scalar_kernel(2), scalar_kernel(1), scalar_kernel(1),
                                         scalar_kernel(0.5), one);
  CHECK_FALSE(neq.equal);
  CHECK(neq.residual == doctest::Approx(2.0));

  const auto eq = conditional_cov_equal(scalar_kernel(2), scalar_kernel(1), scalar_kernel(0.5),
                                        scalar_kernel(1), one);
  CHECK(eq.equal);
  CHECK(eq.common_pd);

  CHECK_THROWS_AS(conditional_cov_equal(k, k, l, random_pd_kernel(2, 2, 2, 2), t), SingularL);
}

TEST_CASE("Monte-Carlo check of Gaussian conditioning") {
  const std::size_t n = 200000;
  const auto indep = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0));
  const auto r0 = mc_verify_conditional(indep, 1, n);
  CHECK(r0.pass);
  CHECK(std::abs(r0.mean_map_truth(0, 0)) == 0.0);

  const auto half = assemble_joint(scalar_kernel(1), scalar_kernel(1), scalar_coupling(0.5));
  const auto r1 = mc_verify_conditional(half, 2, n);
  CHECK(r1.pass);
  CHECK(std::abs(r1.mean_map_estimate(0, 0) - 0.5) < 0.02);
  CHECK(std::abs(r1.cond_cov_estimate(0, 0) - 0.75) < 0.02);

  const auto k = random_pd_kernel(10, 2, 2, 4), l = random_pd_kernel(11, 2, 2, 4);
  const auto block = assemble_joint(k, l, admissible_coupling(k, l, 12, 0.6));
  CHECK(mc_verify_conditional(block, 3, n).pass);

  CHECK_THROWS_AS(mc_verify_conditional(half, 1, 50), ShapeError);
}
