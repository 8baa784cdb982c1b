#include "hzo/objectives.hpp"
#include "hzo/oracle.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace hzo;

namespace {

std::vector<std::unique_ptr<FiniteSumObjective<double>>> all_kinds(const BlockLayout& layout,
                                                                   Index n, RngStream& rng) {
  std::vector<std::unique_ptr<FiniteSumObjective<double>>> out;
  out.push_back(std::make_unique<BlockQuadratic<double>>(
      make_block_quadratic<double>(layout, n, 3.0, 0.5, 1.0, rng)));
  out.push_back(std::make_unique<DenseQuadratic<double>>(
      make_dense_quadratic<double>(layout, n, 1.0, rng)));
  out.push_back(std::make_unique<LinearObjective<double>>(make_linear<double>(layout, n, 1.0, rng)));
  out.push_back(std::make_unique<CoshObjective<double>>(make_cosh<double>(layout, n, 0.5, rng)));
  out.push_back(std::make_unique<LogisticObjective<double>>(
      make_logistic<double>(layout, n, 1.0, 0.01, rng)));
  return out;
}

}  // namespace

TEST(Objectives, GradientsMatchFiniteDifferences) {
  RngStream rng(11, 0);
  const BlockLayout layout(4, 3);
  for (const auto& obj : all_kinds(layout, 5, rng)) {
    for (int k = 0; k < 10; ++k) {
      const VectorX<double> w = sample_gaussian<double>(rng, layout.dim());
      for (Index i = 0; i < obj->num_samples(); ++i) {
        EXPECT_LE(oracle::relative_error(obj->gradient(w, i), oracle::fd_gradient(*obj, w, {i}, 1e-5)),
                  1e-6)
            << obj->kind();
      }
      EXPECT_LE(oracle::relative_error(obj->full_gradient(w), oracle::fd_gradient(*obj, w, {}, 1e-5)),
                1e-6)
          << obj->kind();
    }
  }
}

TEST(Objectives, FullIsMeanOfSamples) {
  RngStream rng(12, 0);
  const BlockLayout layout(2, 2);
  for (const auto& obj : all_kinds(layout, 6, rng)) {
    const VectorX<double> w = sample_gaussian<double>(rng, layout.dim());
    double f = 0;
    VectorX<double> g = VectorX<double>::Zero(layout.dim());
    for (Index i = 0; i < obj->num_samples(); ++i) {
      f += obj->value(w, i);
      g += obj->gradient(w, i);
    }
    EXPECT_NEAR(obj->full_value(w), f / 6, 1e-12 * (1 + std::abs(f)));
    EXPECT_LE((obj->full_gradient(w) - g / 6).norm(), 1e-12 * (1 + g.norm()));
  }
}

TEST(Objectives, ChecksDimensionsAndIndices) {
  RngStream rng(13, 0);
  const BlockLayout layout(2, 2);
  for (const auto& obj : all_kinds(layout, 3, rng)) {
    const VectorX<double> bad = VectorX<double>::Zero(5);
    const VectorX<double> w = VectorX<double>::Zero(4);
    EXPECT_THROW(obj->value(bad, 0), DimensionError);
    EXPECT_THROW(obj->full_gradient(bad), DimensionError);
    EXPECT_THROW(obj->value(w, 3), IndexError);
    EXPECT_THROW(obj->gradient(w, -1), IndexError);
    EXPECT_THROW(eval_full(*obj, HybridPointd::zeros(BlockLayout(3, 1))), DimensionError);
  }
}

TEST(BlockQuadratic, ClosedForm) {
  const BlockLayout layout(2, 1);
  MatrixX<double> centers(3, 2);
  centers << 1, 3,  //
      0, 0,         //
      2, 4;
  const BlockQuadratic<double> q(layout, centers, 10.0, 1.0);
  VectorX<double> w(3);
  w << 0, 1, 0;
  // sample 0: 0.5 (10 (1 + 1) + 4) = 12
  EXPECT_DOUBLE_EQ(q.value(w, 0), 12.0);
  VectorX<double> expected_min(3);
  expected_min << 2, 0, 3;
  EXPECT_EQ(q.minimizer(), expected_min);
  EXPECT_NEAR(q.full_gradient(q.minimizer()).norm(), 0.0, 1e-14);
  // f* = mean of 0.5 A (c_i - cbar)^2 = 0.5 (10 * 1 + 1) = 5.5
  EXPECT_DOUBLE_EQ(*q.known_minimum(), 5.5);
  EXPECT_THROW(BlockQuadratic<double>(layout, centers, 0.0, 1.0), ConfigError);
  EXPECT_THROW(BlockQuadratic<double>(BlockLayout(2, 2), centers, 1.0, 1.0), DimensionError);
}

TEST(DenseQuadratic, RejectsAsymmetricHessian) {
  const BlockLayout layout(1, 1);
  MatrixX<double> h(2, 2);
  h << 1, 2, 0, 1;
  EXPECT_THROW(DenseQuadratic<double>(layout, h, MatrixX<double>::Zero(2, 1)), ConfigError);
}

TEST(DenseQuadratic, KnownMinimumOnlyWhenPositiveDefinite) {
  const BlockLayout layout(1, 1);
  MatrixX<double> pd(2, 2), indefinite(2, 2);
  pd << 2, 0, 0, 1;
  indefinite << 1, 0, 0, -1;
  MatrixX<double> centers(2, 2);
  centers << 1, -1, 0, 2;
  const DenseQuadratic<double> a(layout, pd, centers);
  ASSERT_TRUE(a.known_minimum().has_value());
  // mean over samples of 0.5 (c_i - cbar)^T H (c_i - cbar) = 0.5 (2 * 1 + 1 * 1) = 1.5
  EXPECT_NEAR(*a.known_minimum(), 1.5, 1e-12);
  EXPECT_FALSE(DenseQuadratic<double>(layout, indefinite, centers).known_minimum().has_value());
}

TEST(LinearObjective, ConstantGradientAndNoMinimum) {
  RngStream rng(14, 0);
  const BlockLayout layout(3, 2);
  const LinearObjective<double> lin = make_linear<double>(layout, 4, 2.0, rng);
  const VectorX<double> g0 = lin.full_gradient(VectorX<double>::Zero(5));
  EXPECT_EQ(lin.full_gradient(VectorX<double>::Ones(5)), g0);
  EXPECT_FALSE(lin.known_minimum().has_value());
}

TEST(CoshObjective, HessianEnvelopePerSample) {
  RngStream rng(15, 0);
  const BlockLayout layout(2, 2);
  const CoshObjective<double> c = make_cosh<double>(layout, 3, 1.0, rng);
  for (int k = 0; k < 20; ++k) {
    const VectorX<double> w = 2.0 * sample_gaussian<double>(rng, 4);
    for (Index i = 0; i < 3; ++i) {
      const MatrixX<double> h = oracle::dense_hessian(c, w, {i}, 1e-5).matrix;
      const double g = c.gradient(w, i).norm();
      for (const Block b : {Block::X, Block::Y}) {
        EXPECT_LE(oracle::block_lambda_max(h, layout, b), 1.0 + g + 1e-6);
      }
    }
  }
}

TEST(CoshObjective, KnownMinimumWithIdenticalShifts) {
  const BlockLayout layout(2, 1);
  const CoshObjective<double> same(layout, MatrixX<double>::Constant(3, 4, 0.5));
  EXPECT_DOUBLE_EQ(*same.known_minimum(), 3.0);
  RngStream rng(16, 0);
  EXPECT_FALSE(make_cosh<double>(layout, 4, 1.0, rng).known_minimum().has_value());
}

TEST(LogisticObjective, StableForLargeMargins) {
  const BlockLayout layout(1, 1);
  MatrixX<double> z(2, 1);
  z << 1, 0;
  VectorX<double> b(1);
  b << 1;
  const LogisticObjective<double> lg(layout, z, b, 0.0);
  VectorX<double> w(2);
  w << -1000, 0;
  EXPECT_NEAR(lg.value(w, 0), 1000.0, 1e-9);
  EXPECT_NEAR(lg.gradient(w, 0)[0], -1.0, 1e-12);
  w << 1000, 0;
  EXPECT_GE(lg.value(w, 0), 0.0);
  EXPECT_LT(lg.value(w, 0), 1e-300);
}

TEST(LogisticObjective, LipschitzBoundDominatesHessian) {
  RngStream rng(17, 0);
  const BlockLayout layout(3, 2);
  const LogisticObjective<double> lg = make_logistic<double>(layout, 10, 1.0, 0.1, rng);
  for (int k = 0; k < 10; ++k) {
    const VectorX<double> w = sample_gaussian<double>(rng, 5);
    for (Index i = 0; i < 10; ++i) {
      const MatrixX<double> h = oracle::dense_hessian(lg, w, {i}, 1e-5).matrix;
      Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(h);
      EXPECT_LE(es.eigenvalues().maxCoeff(), lg.lipschitz_bound() + 1e-6);
    }
  }
  MatrixX<double> z = MatrixX<double>::Ones(5, 1);
  VectorX<double> bad(1);
  bad << 0.5;
  EXPECT_THROW(LogisticObjective<double>(layout, z, bad, 0.0), ConfigError);
}

TEST(SampleVariance, MatchesDirectFormula) {
  RngStream rng(18, 0);
  const BlockLayout layout(3, 3);
  const BlockQuadratic<double> q = make_block_quadratic<double>(layout, 7, 5.0, 2.0, 1.0, rng);
  const HybridPointd w(layout, sample_gaussian<double>(rng, 6));
  const VectorX<double> g = q.full_gradient(w.values());
  double direct = 0;
  for (Index i = 0; i < 7; ++i) {
    direct += (q.gradient(w.values(), i) - g).squaredNorm();
  }
  EXPECT_NEAR(sample_variance(q, w), direct / 7, 1e-12 * direct);

  const BlockQuadratic<double> same(layout, MatrixX<double>::Ones(6, 4), 5.0, 2.0);
  EXPECT_EQ(sample_variance(same, w), 0.0);
}

TEST(Generators, SeededInstancesAreReproducible) {
  const BlockLayout layout(3, 2);
  RngStream a(99, 5), b(99, 5);
  EXPECT_EQ(make_logistic<double>(layout, 6, 1.0, 0.0, a).features(),
            make_logistic<double>(layout, 6, 1.0, 0.0, b).features());
}
