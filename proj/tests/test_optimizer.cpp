#include "hzo/optimizer.hpp"
#include "hzo/probe.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace hzo;

namespace {

BlockQuadratic<double> identical_centers(const BlockLayout& layout, Index n, double a_x,
                                         double a_y) {
  return {layout, MatrixX<double>::Zero(layout.dim(), n), a_x, a_y};
}

OptimizerConfig<double> fo_config(double eta_x, double eta_y, Index epochs) {
  OptimizerConfig<double> cfg;
  cfg.modes = {UpdateMode::FirstOrder, UpdateMode::FirstOrder};
  cfg.rates = {eta_x, eta_y};
  cfg.epochs = epochs;
  return cfg;
}

}  // namespace

TEST(Step, FirstOrderMatchesClosedForm) {
  const BlockLayout layout(2, 2);
  const auto q = identical_centers(layout, 3, 10.0, 1.0);
  const HybridPointd w(layout, VectorX<double>::Ones(4));
  RngStream rng(31, 0);
  const HybridPointd next = step(q, w, 0, fo_config(0.05, 0.5, 1), rng);
  VectorX<double> expected(4);
  expected << 0.5, 0.5, 0.5, 0.5;
  EXPECT_LE((next.values() - expected).norm(), 1e-15);
}

TEST(Step, UsesIncomingPointForBothBlocks) {
  // Cross-coupled dense quadratic: the y direction must see the old x.
  const BlockLayout layout(1, 1);
  MatrixX<double> h(2, 2);
  h << 1, 1, 1, 1;
  const DenseQuadratic<double> q(layout, h, MatrixX<double>::Zero(2, 1));
  VectorX<double> x(2);
  x << 1, 0;
  RngStream rng(32, 0);
  const HybridPointd next = step(q, HybridPointd(layout, x), 0, fo_config(0.5, 0.5, 1), rng);
  EXPECT_DOUBLE_EQ(next.values()[0], 0.5);
  EXPECT_DOUBLE_EQ(next.values()[1], -0.5);
}

TEST(Step, FrozenBlockDoesNotMove) {
  const BlockLayout layout(2, 2);
  const auto q = identical_centers(layout, 3, 1.0, 1.0);
  const HybridPointd w(layout, VectorX<double>::Ones(4));
  OptimizerConfig<double> cfg = fo_config(0.1, 0.1, 1);
  cfg.modes.x = UpdateMode::Frozen;
  RngStream rng(33, 0);
  const HybridPointd next = step(q, w, 1, cfg, rng);
  EXPECT_EQ(next.x(), w.x());
  EXPECT_NE(next.y(), w.y());
}

TEST(Step, ZeroRateIsIdentity) {
  const BlockLayout layout(3, 2);
  RngStream data(34, 0);
  const auto q = make_block_quadratic<double>(layout, 4, 2.0, 1.0, 1.0, data);
  const HybridPointd w(layout, sample_gaussian<double>(data, 5));
  OptimizerConfig<double> cfg;
  cfg.rates = {0.0, 0.0};
  RngStream rng(34, 1);
  EXPECT_EQ(step(q, w, 0, cfg, rng), w);
}

TEST(Step, ZerothOrderDrawsXBeforeY) {
  const BlockLayout layout(2, 3);
  RngStream data(35, 0);
  const auto q = make_block_quadratic<double>(layout, 2, 2.0, 1.0, 1.0, data);
  const HybridPointd w(layout, VectorX<double>::Ones(5));
  OptimizerConfig<double> cfg;
  cfg.modes = {UpdateMode::ZerothOrder, UpdateMode::ZerothOrder};
  cfg.rates = {0.1, 0.2};
  RngStream a(35, 1), b(35, 1);
  const HybridPointd next = step(q, w, 1, cfg, a);
  const VectorX<double> gx = estimate_block_gradient(q, w, 1, cfg.zo, b, Block::X);
  const VectorX<double> gy = estimate_block_gradient(q, w, 1, cfg.zo, b, Block::Y);
  EXPECT_LE((next.x() - (w.x() - 0.1 * gx)).norm(), 1e-15);
  EXPECT_LE((next.y() - (w.y() - 0.2 * gy)).norm(), 1e-15);
}

TEST(Step, NonFiniteUpdateThrows) {
  const BlockLayout layout(1, 1);
  const auto q = identical_centers(layout, 1, 1.0, 1.0);
  const HybridPointd w(layout, VectorX<double>::Constant(2, 1e300));
  RngStream rng(36, 0);
  EXPECT_THROW(step(q, w, 0, fo_config(1e10, 0.0, 1), rng), NumericError);
}

TEST(RunEpoch, VisitsEverySampleOnce) {
  const BlockLayout layout(2, 2);
  RngStream data(37, 0);
  const auto q = make_block_quadratic<double>(layout, 7, 1.0, 1.0, 1.0, data);
  RngStream rng(37, 1);
  for (int epoch = 0; epoch < 50; ++epoch) {
    std::multiset<Index> seen;
    run_epoch<double>(q, HybridPointd::zeros(layout), fo_config(0.01, 0.01, 1), rng,
                      [&](const TraceRecord<double>& r) { seen.insert(r.sample); });
    EXPECT_EQ(seen, (std::multiset<Index>{0, 1, 2, 3, 4, 5, 6}));
  }
}

TEST(Run, GradientDescentContractionOnIdenticalCenters) {
  // Identical centers: every sample gradient equals the full gradient, so
  // each step contracts x by (1 - eta_x a_x) and y by (1 - eta_y a_y).
  const BlockLayout layout(2, 2);
  const auto q = identical_centers(layout, 5, 4.0, 1.0);
  const HybridPointd w0(layout, VectorX<double>::Ones(4));
  const auto r = run(q, w0, fo_config(0.1, 0.3, 3));
  ASSERT_EQ(r.trace.size(), 15u);
  const double kx = std::pow(0.6, 15), ky = std::pow(0.7, 15);
  EXPECT_NEAR(r.final_point.values()[0], kx, 1e-14);
  EXPECT_NEAR(r.final_point.values()[3], ky, 1e-14);
  EXPECT_EQ(r.epochs_completed, 3);
  EXPECT_EQ(r.epoch_grad_norm_sq.size(), 4u);
  EXPECT_FALSE(r.divergence.has_value());
  EXPECT_EQ(r.trace.front().step, 1);
  EXPECT_EQ(r.trace.back().step, 15);
  EXPECT_EQ(r.trace.back().epoch, 3);
}

TEST(Run, DetectsDivergence) {
  const BlockLayout layout(2, 2);
  const auto q = identical_centers(layout, 5, 100.0, 1.0);
  const HybridPointd w0(layout, VectorX<double>::Ones(4));
  const auto r = run(q, w0, fo_config(0.021, 0.021, 100));
  ASSERT_TRUE(r.divergence.has_value());
  EXPECT_GT(r.divergence->f_value, r.divergence->threshold);
  EXPECT_EQ(r.trace.back().step, r.divergence->step);
  EXPECT_LT(r.epochs_completed, 100);
  // f0 = 0.5 * (100 * 2 + 2) = 101, threshold 1e6 * 101
  EXPECT_DOUBLE_EQ(r.divergence->threshold, 1.01e8);
}

TEST(Run, ExplicitDivergenceThreshold) {
  const BlockLayout layout(1, 1);
  const auto q = identical_centers(layout, 2, 1.0, 1.0);
  OptimizerConfig<double> cfg = fo_config(3.0, 0.0, 10);
  cfg.divergence_threshold = 10.0;
  const auto r = run(q, HybridPointd(layout, VectorX<double>::Ones(2)), cfg);
  ASSERT_TRUE(r.divergence.has_value());
  EXPECT_EQ(r.divergence->threshold, 10.0);
}

TEST(Run, DeterministicPerSeed) {
  const BlockLayout layout(3, 2);
  RngStream data(38, 0);
  const auto q = make_block_quadratic<double>(layout, 6, 3.0, 1.0, 1.0, data);
  const HybridPointd w0(layout, sample_gaussian<double>(data, 5));
  OptimizerConfig<double> cfg;
  cfg.rates = {0.01, 0.1};
  cfg.epochs = 5;
  cfg.seed = 77;
  const auto a = run(q, w0, cfg);
  const auto b = run(q, w0, cfg);
  EXPECT_EQ(a.final_point, b.final_point);
  cfg.seed = 78;
  EXPECT_NE(run(q, w0, cfg).final_point, a.final_point);
}

TEST(Run, ObserverSeesEveryStep) {
  const BlockLayout layout(1, 1);
  const auto q = identical_centers(layout, 4, 1.0, 1.0);
  std::vector<Index> steps;
  RngStream rng(39, 0);
  run<double>(q, HybridPointd::zeros(layout), fo_config(0.1, 0.1, 2), rng, {},
              [&](Index s, const HybridPointd&) { steps.push_back(s); });
  EXPECT_EQ(steps, (std::vector<Index>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(OptimizerConfig, Validates) {
  OptimizerConfig<double> cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.epochs = 1;
  cfg.rates.eta_x = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.rates.eta_x = 0.1;
  cfg.zo.mu = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.modes = {UpdateMode::FirstOrder, UpdateMode::FirstOrder};
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunningMean, Values) {
  EXPECT_EQ(running_mean<double>({4, 2, 0}), (std::vector<double>{4, 3, 2}));
}

template <typename T>
class ScalarTypes : public ::testing::Test {};
using Scalars = ::testing::Types<float, long double>;
TYPED_TEST_SUITE(ScalarTypes, Scalars);

TYPED_TEST(ScalarTypes, HybridRunConverges) {
  using S = TypeParam;
  const BlockLayout layout(3, 2);
  RngStream data(40, 0);
  const auto q = make_block_quadratic<S>(layout, 4, S(4), S(1), S(0), data);
  OptimizerConfig<S> cfg;
  cfg.rates = {S(0.02), S(0.2)};
  cfg.zo.mu = S(1e-2);
  cfg.epochs = 100;
  const auto r = run(q, HybridPoint<S>(layout, VectorX<S>::Ones(5)), cfg);
  EXPECT_LT(r.trace.back().f_value, S(1e-2) * r.initial_f);
  RngStream rng(40, 1);
  const auto report = estimate_block_lipschitz(q, HybridPoint<S>::zeros(layout),
                                               ProbeConfig<S>{S(1e-2), 10, Block::X}, rng);
  EXPECT_NEAR(static_cast<double>(report.operator_lb), 4.0, 1e-4);
}
