#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "plkan/plkan.hpp"
#include "support/oracles.hpp"
#include "support/random_models.hpp"

using namespace plkan;
using plkan::testing::oracle_pl;

namespace {

PiecewiseLinear fstar() { return PiecewiseLinear({-1.0, 1.0}, {1.0, 2.0, 0.5}, 0.0); }

Mlp abs_mlp() {
  return Mlp({MlpLayer(Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 0.0}, Activation::relu),
              MlpLayer(Matrix::from_rows({{1.0, 1.0}}), {0.0}, Activation::identity)});
}

}  // namespace

TEST(PiecewiseLinear, IdentityEvaluatesToInput) {
  EXPECT_EQ(PiecewiseLinear({}, {1.0}, 0.0)(3.7), 3.7);
}

TEST(PiecewiseLinear, FStarValues) {
  const auto f = fstar();
  EXPECT_DOUBLE_EQ(f(0.0), 1.0);
  EXPECT_DOUBLE_EQ(f(2.0), 3.5);
  EXPECT_DOUBLE_EQ(f(-2.0), -2.0);
  EXPECT_DOUBLE_EQ(f(-1.0), -1.0);
  EXPECT_DOUBLE_EQ(f(1.0), 3.0);
  EXPECT_EQ(f.segments(), 3U);
}

TEST(PiecewiseLinear, BreakpointBelongsToRightSegment) {
  const auto f = fstar();
  EXPECT_EQ(f.segment_index(-1.0), 1U);
  EXPECT_EQ(f.segment_index(1.0), 2U);
  EXPECT_EQ(f.segment_index(-1.0000001), 0U);
}

TEST(PiecewiseLinear, RejectsInvalid) {
  EXPECT_THROW(PiecewiseLinear({1.0, 1.0}, {1, 2, 3}, 0), ValidationError);
  EXPECT_THROW(PiecewiseLinear({2.0, 1.0}, {1, 2, 3}, 0), ValidationError);
  EXPECT_THROW(PiecewiseLinear({1.0}, {1}, 0), ValidationError);
  EXPECT_THROW(PiecewiseLinear({}, {std::nan("")}, 0), ValidationError);
  EXPECT_THROW(PiecewiseLinear({std::numeric_limits<double>::infinity()}, {1, 2}, 0), ValidationError);
}

TEST(PiecewiseLinear, NonFiniteInputIsDomainError) {
  EXPECT_THROW((void)fstar()(std::nan("")), DomainError);
  EXPECT_THROW((void)fstar()(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(PiecewiseLinear, SegmentFormulasMatchSlopes) {
  const auto f = fstar();
  const auto segs = f.segment_formulas();
  ASSERT_EQ(segs.size(), 3U);
  EXPECT_DOUBLE_EQ(segs[0].slope, 1.0);
  EXPECT_DOUBLE_EQ(segs[1].slope, 2.0);
  EXPECT_DOUBLE_EQ(segs[2].slope, 0.5);
  EXPECT_DOUBLE_EQ(segs[2].intercept, 2.5);
}

TEST(PiecewiseLinear, NormalizedMergesEqualSlopes) {
  const PiecewiseLinear f({0.0, 1.0}, {1.0, 1.0, 2.0}, 0.5);
  const auto g = f.normalized();
  EXPECT_EQ(g.segments(), 2U);
  EXPECT_EQ(g.breakpoints(), std::vector<double>{1.0});
  for (double x : {-3.0, 0.0, 0.5, 1.0, 4.0}) EXPECT_DOUBLE_EQ(f(x), g(x));
}

TEST(PiecewiseLinear, AgreesWithOracleAndIsContinuous) {
  plkan::testing::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = plkan::testing::random_pl(rng, plkan::testing::uniform_int(rng, 1, 6));
    for (int i = 0; i < 20; ++i) {
      const double x = plkan::testing::uniform(rng, -5, 5);
      EXPECT_NEAR(f(x), oracle_pl(f, x), 1e-12 * (1 + std::abs(f(x))));
    }
    const auto segs = f.segment_formulas();
    for (std::size_t i = 0; i < f.breakpoints().size(); ++i) {
      const double b = f.breakpoints()[i];
      EXPECT_NEAR(segs[i](b), segs[i + 1](b), 1e-12 * (1 + std::abs(segs[i](b))));
    }
    // Three collinear points inside each interior segment.
    for (std::size_t i = 1; i + 1 < f.segments(); ++i) {
      const double lo = f.breakpoints()[i - 1];
      const double hi = f.breakpoints()[i];
      const double x0 = lo + 0.25 * (hi - lo);
      const double x1 = lo + 0.5 * (hi - lo);
      const double x2 = lo + 0.75 * (hi - lo);
      const double residual = (f(x2) - f(x1)) - (f(x1) - f(x0));
      EXPECT_LE(std::abs(residual), 1e-12 * (1 + std::abs(f(x1))) + 1e-12);
    }
  }
}

TEST(PiecewiseLinear, OneSegmentIsAffine) {
  const PiecewiseLinear f({}, {-1.25}, 0.75);
  for (double x : {-10.0, 0.0, 3.0}) EXPECT_EQ(f(x), -1.25 * x + 0.75);
}

TEST(Kan, SingleLayerFStar) {
  const Kan k({KanLayer(1, 1, {fstar()})});
  EXPECT_EQ(k(std::vector<double>{2.0}), std::vector<double>{3.5});
}

TEST(Kan, TwoToOneIdentitySum) {
  const Kan k({KanLayer(2, 1, {PiecewiseLinear::identity(), PiecewiseLinear::identity()})});
  EXPECT_EQ(k(std::vector<double>{1.5, -0.5}), std::vector<double>{1.0});
}

TEST(Kan, StackedIdentities) {
  const Kan k({KanLayer(1, 1, {PiecewiseLinear::identity()}), KanLayer(1, 1, {PiecewiseLinear::identity()})});
  for (double x : {-4.5, 0.0, 1e6}) EXPECT_EQ(k(std::vector<double>{x}), std::vector<double>{x});
}

TEST(Kan, SingleOutputLayerEqualsSumOfActivations) {
  plkan::testing::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PiecewiseLinear> acts;
    for (int p = 0; p < 3; ++p) acts.push_back(plkan::testing::random_pl(rng, 4));
    const Kan k({KanLayer(3, 1, acts)});
    const std::vector<double> x{plkan::testing::uniform(rng, -4, 4), plkan::testing::uniform(rng, -4, 4),
                                plkan::testing::uniform(rng, -4, 4)};
    double s = 0.0;
    for (int p = 0; p < 3; ++p) s += acts[p](x[p]);
    EXPECT_EQ(k(x)[0], s);
  }
}

TEST(Kan, RejectsBadShapes) {
  EXPECT_THROW(KanLayer(0, 1, {}), ValidationError);
  EXPECT_THROW(KanLayer(2, 1, {PiecewiseLinear::identity()}), ValidationError);
  EXPECT_THROW(Kan({KanLayer(1, 2, {PiecewiseLinear::identity(), PiecewiseLinear::identity()}),
                    KanLayer(1, 1, {PiecewiseLinear::identity()})}),
               ValidationError);
  EXPECT_THROW(Kan(std::vector<KanLayer>{}), ValidationError);
  const Kan k({KanLayer(1, 1, {fstar()})});
  EXPECT_THROW((void)k(std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(Kan, WidthsAndSegments) {
  const Kan k({KanLayer(1, 2, {fstar(), PiecewiseLinear::relu()}), KanLayer(2, 1, {fstar(), fstar()})});
  EXPECT_EQ(k.widths(), (std::vector<std::size_t>{1, 2, 1}));
  EXPECT_EQ(k.max_width(), 2U);
  EXPECT_EQ(k.max_segments(), 3U);
}

TEST(Mlp, AbsoluteValue) {
  const auto m = abs_mlp();
  EXPECT_EQ(m(std::vector<double>{-3.0}), std::vector<double>{3.0});
  EXPECT_EQ(m(std::vector<double>{0.0}), std::vector<double>{0.0});
}

TEST(Mlp, AffineLayer) {
  const Mlp m({MlpLayer(Matrix::from_rows({{2, 0}, {0, 2}}), {1, 1}, Activation::identity)});
  EXPECT_EQ(m(std::vector<double>{1, 1}), (std::vector<double>{3, 3}));
}

TEST(Mlp, OutputConventionEnforced) {
  EXPECT_THROW(Mlp({MlpLayer(Matrix::from_rows({{1.0}}), {0.0}, Activation::relu)}), ValidationError);
  EXPECT_THROW(Mlp({MlpLayer(Matrix::from_rows({{1.0}}), {0.0}, Activation::identity),
                    MlpLayer(Matrix::from_rows({{1.0}}), {0.0}, Activation::identity)}),
               ValidationError);
  EXPECT_THROW(MlpLayer(Matrix::from_rows({{1.0}}), {0.0, 1.0}, Activation::identity), ValidationError);
  EXPECT_THROW(Mlp({MlpLayer(Matrix::from_rows({{1.0}, {2.0}}), {0.0, 0.0}, Activation::relu),
                    MlpLayer(Matrix::from_rows({{1.0}}), {0.0}, Activation::identity)}),
               ValidationError);
}

TEST(Mlp, AgreesWithOracle) {
  plkan::testing::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = plkan::testing::random_mlp(rng);
    std::vector<double> x(m.input_dim());
    for (double& v : x) v = plkan::testing::uniform(rng, -3, 3);
    const auto a = m(x);
    const auto b = plkan::testing::oracle_mlp(m, x);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1 + std::abs(b[i])));
  }
}
