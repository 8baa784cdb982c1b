#include "hzo/planner.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hzo;

namespace {

PlanInputs<double> unit_inputs() {
  PlanInputs<double> in;
  in.constants = {1, 1, 1, 1, 1, 1, 0};
  in.n = 10;
  in.epochs = 100;
  in.d_x = 4;
  return in;
}

}  // namespace

TEST(PlanRates, EtaXExample) {
  const RatePlan<double> p = plan_rates(unit_inputs());
  EXPECT_EQ(p.eta_x.value, 1.0 / 15360.0);
  EXPECT_NEAR(p.eta_x.value, 6.5104e-5, 5e-10);
  EXPECT_EQ(p.eta_x.binding, 1u);
  EXPECT_EQ(p.eta_x.terms[0].value, 1.0 / 20.0);
  EXPECT_NEAR(p.eta_x.terms[2].value, std::sqrt(0.02) / 10.0, 1e-17);
}

TEST(PlanRates, EtaYExample) {
  const RatePlan<double> p = plan_rates(unit_inputs());
  EXPECT_NEAR(p.eta_y.value, 0.0141421356237309505, 1e-17);
  EXPECT_EQ(p.eta_y.binding, 1u);
}

TEST(PlanRates, MuTerms) {
  const RatePlan<double> p = plan_rates(unit_inputs());
  EXPECT_DOUBLE_EQ(p.mu.terms[0].value, 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(p.mu.terms[1].value, 1.0 / (3.0 * 100 * 10 * 4));
  EXPECT_EQ(p.mu.binding, 1u);
}

TEST(PlanRates, ZeroSigmaDropsNoiseTerms) {
  PlanInputs<double> in = unit_inputs();
  in.constants.sigma = 0;
  const RatePlan<double> p = plan_rates(in);
  EXPECT_FALSE(p.eta_x.terms[2].active);
  EXPECT_TRUE(std::isinf(p.eta_x.terms[2].value));
  EXPECT_EQ(p.eta_y.value, 1.0 / 20.0);
  EXPECT_EQ(p.eta_y.binding, 0u);
}

TEST(PlanRates, EtaXVanishesWithT) {
  PlanInputs<double> in;
  in.constants = {1, 1, 1, 1, 1, 1, 0};
  in.n = 1;
  in.d_x = 1;
  double prev = std::numeric_limits<double>::infinity();
  for (Index T = 1; T <= Index{1} << 40; T *= 4) {
    in.epochs = T;
    const double eta = plan_rates(in).eta_x.value;
    EXPECT_LE(eta, prev);
    prev = eta;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(PlanRates, RejectsInvalidInputs) {
  PlanInputs<double> in = unit_inputs();
  in.constants.L_x = 0;
  EXPECT_THROW(plan_rates(in), ConfigError);
  in = unit_inputs();
  in.constants.sigma = -1;
  EXPECT_THROW(plan_rates(in), ConfigError);
  in = unit_inputs();
  in.epochs = 0;
  EXPECT_THROW(plan_rates(in), ConfigError);
}

TEST(PlanRates, MonotoneOnRandomGrid) {
  RngStream rng(51, 0);
  const auto pick = [&](double lo, double hi) { return lo * std::pow(hi / lo, rng.uniform()); };
  for (int k = 0; k < 100; ++k) {
    PlanInputs<double> in;
    auto& c = in.constants;
    c.L_x = pick(0.1, 100);
    c.L_y = pick(0.1, 100);
    c.L_x_max = c.L_x * pick(1, 10);
    c.L_y_max = c.L_y * pick(1, 10);
    c.G = pick(0.1, 10);
    c.sigma = pick(0.01, 10);
    in.n = 1 + static_cast<Index>(rng.below(100));
    in.epochs = 1 + static_cast<Index>(rng.below(10000));
    in.d_x = 1 + static_cast<Index>(rng.below(1000));
    const RatePlan<double> base = plan_rates(in);

    // Each input appears only in denominators of the rate terms.
    const auto check = [&](PlanInputs<double> bigger) {
      const RatePlan<double> p = plan_rates(bigger);
      EXPECT_LE(p.eta_x.value, base.eta_x.value);
      EXPECT_LE(p.eta_y.value, base.eta_y.value);
    };
    PlanInputs<double> b = in;
    b.n *= 2;
    check(b);
    b = in;
    b.epochs *= 2;
    check(b);
    b = in;
    b.d_x *= 2;
    check(b);
    b = in;
    b.constants.sigma *= 2;
    check(b);
    for (double SmoothnessConstants<double>::*field :
         {&SmoothnessConstants<double>::L_x, &SmoothnessConstants<double>::L_y,
          &SmoothnessConstants<double>::L_x_max, &SmoothnessConstants<double>::L_y_max}) {
      b = in;
      b.constants.*field *= 2;
      check(b);
    }
    // x-constants dominating y-constants gives eta_x <= eta_y.
    PlanInputs<double> dom = in;
    dom.constants.L_y = std::min(c.L_y, c.L_x);
    dom.constants.L_y_max = std::min(c.L_y_max, c.L_x_max);
    const RatePlan<double> p = plan_rates(dom);
    EXPECT_LE(p.eta_x.value, p.eta_y.value);
  }
}

TEST(EpochBudget, Example) {
  const EpochBudget<double> b = epoch_budget_terms(0.1, 0.5, 1.0, 1.0, Index{10});
  EXPECT_NEAR(b.gradient_term, 412.5, 1e-9);
  EXPECT_NEAR(b.gap_term, 4000.0, 1e-9);
  EXPECT_EQ(b.epochs, 4413u);
  EXPECT_EQ(epoch_budget(0.1, 0.5, 1.0, 1.0, Index{10}), 4413u);
}

TEST(EpochBudget, HalvingEpsilonScalesGapTermBy16) {
  const auto a = epoch_budget_terms(0.2, 0.5, 1.0, 2.0, Index{5});
  const auto b = epoch_budget_terms(0.1, 0.5, 1.0, 2.0, Index{5});
  EXPECT_NEAR(b.gap_term / a.gap_term, 16.0, 1e-12);
  EXPECT_NEAR(b.gradient_term / a.gradient_term, 4.0, 1e-12);
}

TEST(EpochBudget, MonotoneInDeltaAndConsistent) {
  std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
  for (double delta = 0.05; delta < 1.0; delta += 0.05) {
    const auto b = epoch_budget_terms(0.3, delta, 2.0, 1.0, Index{4});
    EXPECT_LE(b.epochs, prev);
    prev = b.epochs;
    EXPECT_GE(static_cast<double>(b.epochs), b.gradient_term + b.gap_term);
    EXPECT_LT(static_cast<double>(b.epochs), b.gradient_term + b.gap_term + 1);
  }
}

TEST(EpochBudget, RejectsInvalidDelta) {
  EXPECT_THROW(epoch_budget(0.1, 0.0, 1.0, 1.0, Index{1}), ConfigError);
  EXPECT_THROW(epoch_budget(0.1, 1.0, 1.0, 1.0, Index{1}), ConfigError);
  EXPECT_THROW(epoch_budget(0.0, 0.5, 1.0, 1.0, Index{1}), ConfigError);
}

TEST(EstimateConstants, ExactOnIdenticalCenters) {
  const BlockLayout layout(4, 3);
  const BlockQuadratic<double> q(layout, MatrixX<double>::Zero(7, 5), 100.0, 1.0);
  RngStream rng(52, 0);
  const std::vector<HybridPointd> points{HybridPointd(layout, VectorX<double>::Ones(7))};
  const auto c = estimate_constants(q, ProbeConfig<double>{}, points, rng);
  // Away from the minimizer the difference quotient carries rounding of
  // order eps * ||grad|| / h.
  EXPECT_NEAR(c.L_x, 100.0, 1e-7);
  EXPECT_NEAR(c.L_x_max, 100.0, 1e-7);
  EXPECT_NEAR(c.L_y, 1.0, 1e-7);
  EXPECT_NEAR(c.L_y_max, 1.0, 1e-7);
  EXPECT_EQ(c.sigma, 0.0);
  const auto at_min =
      estimate_constants(q, ProbeConfig<double>{}, {HybridPointd::zeros(layout)}, rng);
  EXPECT_NEAR(at_min.L_x, 100.0, 1e-9);
  EXPECT_NEAR(at_min.L_x_max, 100.0, 1e-9);
  EXPECT_NEAR(at_min.L_y, 1.0, 1e-9);
  EXPECT_NEAR(at_min.L_y_max, 1.0, 1e-9);
  EXPECT_NEAR(c.G, std::sqrt(4 * 1e4 + 3.0), 1e-9);
  EXPECT_NEAR(c.f_gap, 0.5 * (4 * 100 + 3), 1e-9);
}

TEST(EstimateConstants, SigmaMatchesDirectFormula) {
  const BlockLayout layout(2, 2);
  RngStream rng(53, 0);
  const auto q = make_block_quadratic<double>(layout, 6, 3.0, 1.0, 1.0, rng);
  std::vector<HybridPointd> points;
  double sigma = 0;
  for (int k = 0; k < 3; ++k) {
    points.emplace_back(layout, sample_gaussian<double>(rng, 4));
    const VectorX<double> g = q.full_gradient(points.back().values());
    double s = 0;
    for (Index i = 0; i < 6; ++i) {
      s += (q.gradient(points.back().values(), i) - g).squaredNorm();
    }
    sigma = std::max(sigma, std::sqrt(s / 6));
  }
  const auto c = estimate_constants(q, ProbeConfig<double>{1e-5, 10, Block::X}, points, rng);
  EXPECT_NEAR(c.sigma, sigma, 1e-12);
  EXPECT_GE(c.L_x_max, c.L_x - 1e-9);
  EXPECT_GE(c.L_y_max, c.L_y - 1e-9);
}

TEST(EstimateConstants, CoshWithinEnvelope) {
  const BlockLayout layout(3, 2);
  RngStream rng(54, 0);
  const CoshObjective<double> c(layout, MatrixX<double>::Zero(5, 1));
  std::vector<HybridPointd> points;
  for (int k = 0; k < 10; ++k) {
    points.emplace_back(layout, sample_gaussian<double>(rng, 5));
  }
  const auto k = estimate_constants(c, ProbeConfig<double>{}, points, rng);
  EXPECT_LE(k.L_x, 1 + k.G + 1e-6);
  EXPECT_LE(k.L_y, 1 + k.G + 1e-6);
}

TEST(EstimateConstants, NeedsMinimum) {
  const BlockLayout layout(1, 1);
  RngStream rng(55, 0);
  const auto lin = make_linear<double>(layout, 2, 1.0, rng);
  const std::vector<HybridPointd> points{HybridPointd::zeros(layout)};
  EXPECT_THROW(estimate_constants(lin, ProbeConfig<double>{}, points, rng), ConfigError);
  EXPECT_NO_THROW(estimate_constants(lin, ProbeConfig<double>{}, points, rng, {-10.0}));
  EXPECT_THROW(estimate_constants(lin, ProbeConfig<double>{}, {}, rng, {0.0}), ConfigError);
}
