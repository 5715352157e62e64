#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "plkan/plkan.hpp"
#include "support/oracles.hpp"
#include "support/random_models.hpp"

using namespace plkan;
namespace pt = plkan::testing;

namespace {

PiecewiseLinear fstar() { return PiecewiseLinear({-1.0, 1.0}, {1.0, 2.0, 0.5}, 0.0); }

double max_complex_error(const Complex1D& c, const auto& net, pt::Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = pt::uniform(rng, -6, 6);
    const auto a = c(x);
    const auto b = net(std::vector<double>{x});
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, pt::combined_error(a[j], b[j]));
  }
  return worst;
}

}  // namespace

TEST(ExactRegions1D, FStar) {
  const auto c = exact_regions_1d(Kan({KanLayer(1, 1, {fstar()})}));
  ASSERT_EQ(c.regions(), 3U);
  EXPECT_EQ(c.cuts, (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(c.pieces[0].slope[0], 1.0);
  EXPECT_EQ(c.pieces[1].slope[0], 2.0);
  EXPECT_EQ(c.pieces[2].slope[0], 0.5);
  EXPECT_EQ(c.pieces[2].intercept[0], 2.5);
}

TEST(ExactRegions1D, AffineHasOneRegion) {
  const auto c = exact_regions_1d(Kan({KanLayer(1, 1, {PiecewiseLinear::affine(-2, 3)})}));
  EXPECT_EQ(c.regions(), 1U);
  EXPECT_TRUE(c.cuts.empty());
}

TEST(ExactRegions1D, FStarAfterRelu) {
  const Kan k({KanLayer(1, 1, {PiecewiseLinear::relu()}), KanLayer(1, 1, {fstar()})});
  const auto c = exact_regions_1d(k);
  ASSERT_EQ(c.regions(), 3U);
  EXPECT_EQ(c.cuts, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(c.pieces[0].slope[0], 0.0);
  EXPECT_EQ(c.pieces[0].intercept[0], 1.0);
  EXPECT_EQ(c.pieces[1].slope[0], 2.0);
  EXPECT_EQ(c.pieces[2].slope[0], 0.5);
  EXPECT_LE(c.regions(), composition_segment_bound(2, 3));
}

TEST(ExactRegions1D, AbsoluteValueMlp) {
  const Mlp m({MlpLayer(Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 0.0}, Activation::relu),
               MlpLayer(Matrix::from_rows({{1.0, 1.0}}), {0.0}, Activation::identity)});
  const auto c = exact_regions_1d(m);
  ASSERT_EQ(c.regions(), 2U);
  EXPECT_EQ(c.cuts, std::vector<double>{0.0});
  EXPECT_EQ(c.pieces[0].slope[0], -1.0);
  EXPECT_EQ(c.pieces[1].slope[0], 1.0);
}

TEST(ExactRegions1D, SpuriousBreakpointMerged) {
  const auto c = exact_regions_1d(Kan({KanLayer(1, 1, {PiecewiseLinear({0.5}, {1.0, 1.0}, 0.0)})}));
  EXPECT_EQ(c.regions(), 1U);
}

TEST(ExactRegions1D, ZeroSlopeCrossingInsertsNoCut) {
  // Constant 1 fed into a function with a breakpoint exactly at 1.
  const Kan k({KanLayer(1, 1, {PiecewiseLinear::affine(0.0, 1.0)}),
               KanLayer(1, 1, {PiecewiseLinear({1.0}, {3.0, -2.0}, 0.0)})});
  const auto c = exact_regions_1d(k);
  EXPECT_EQ(c.regions(), 1U);
  EXPECT_EQ(c.pieces[0].intercept[0], 3.0);
}

TEST(ExactRegions1D, MultiOutput) {
  const Kan k({KanLayer(1, 2, {fstar(), PiecewiseLinear::relu()})});
  const auto c = exact_regions_1d(k);
  EXPECT_EQ(c.output_dim(), 2U);
  EXPECT_EQ(c.cuts, (std::vector<double>{-1.0, 0.0, 1.0}));
}

TEST(ExactRegions1D, RejectsOtherDimensions) {
  const Kan k({KanLayer(2, 1, {fstar(), fstar()})});
  EXPECT_THROW((void)exact_regions_1d(k), UnsupportedDimensionError);
  EXPECT_THROW((void)exact_regions_1d(kan_to_mlp(k, ConversionMode::exact)), UnsupportedDimensionError);
}

TEST(ExactRegions1D, ComplexMatchesNetwork) {
  pt::Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Kan k = pt::random_kan(rng, {.input_dim = 1});
    const auto c = exact_regions_1d(k);
    EXPECT_LE(max_complex_error(c, k, rng), 1e-9);
    // Continuity at every cut.
    for (std::size_t i = 0; i < c.cuts.size(); ++i) {
      const auto l = c.pieces[i](c.cuts[i]);
      const auto r = c.pieces[i + 1](c.cuts[i]);
      for (std::size_t j = 0; j < l.size(); ++j) EXPECT_LE(pt::combined_error(l[j], r[j]), 1e-10);
    }
    const Mlp m = pt::random_mlp(rng, {.input_dim = 1});
    EXPECT_LE(max_complex_error(exact_regions_1d(m), m, rng), 1e-9);
  }
}

TEST(ExactRegions1D, InvariantUnderConversion) {
  pt::Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Kan k = pt::random_kan(rng, {.input_dim = 1});
    const auto a = exact_regions_1d(k);
    const auto b = exact_regions_1d(kan_to_mlp(k, ConversionMode::exact));
    EXPECT_EQ(a.regions(), b.regions());
  }
}

TEST(ExactRegions1D, KinksFoundIndependently) {
  // Every slope change seen by the midpoint oracle lies on a reported cut,
  // so the oracle can never count more pieces than the complex.
  pt::Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = pt::random_pl(rng, pt::uniform_int(rng, 1, 6));
    const auto g = pt::random_pl(rng, pt::uniform_int(rng, 1, 6));
    const Kan k({KanLayer(1, 1, {f}), KanLayer(1, 1, {g})});
    const auto c = exact_regions_1d(k);
    const std::size_t oracle = pt::oracle_count_pieces([&](double x) { return g(f(x)); },
                                                       pt::oracle_composition_candidates(f, g));
    EXPECT_EQ(c.regions(), oracle);
  }
}

TEST(CompositionSegmentBound, Examples) {
  EXPECT_EQ(composition_segment_bound(2, 3), 6U);
  for (std::size_t m = 1; m < 8; ++m) EXPECT_EQ(composition_segment_bound(1, m), m);
}

TEST(CompositionSegmentBound, FourByThree) {
  pt::Rng rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = pt::random_pl(rng, 4);
    const auto g = pt::random_pl(rng, 3);
    const std::size_t oracle = pt::oracle_count_pieces([&](double x) { return g(f(x)); },
                                                       pt::oracle_composition_candidates(f, g));
    EXPECT_LE(oracle, 12U);
  }
}

TEST(GridFingerprint2D, Pyramid) {
  const PiecewiseLinear v({0.0}, {-1.0, 1.0}, 0.0);
  const Kan k({KanLayer(2, 1, {v, v})});
  const auto g = grid_fingerprint_2d(k, Box2D{-1, 1, -1, 1}, 64);
  EXPECT_EQ(g.estimated_regions, 4U);
  EXPECT_EQ(g.fingerprints.size(), 4U);
}

TEST(GridFingerprint2D, AffineIsOneRegion) {
  const Kan k({KanLayer(2, 1, {PiecewiseLinear::affine(0.3, 1), PiecewiseLinear::affine(-2, 0)})});
  for (std::size_t res : {8U, 17U, 64U}) EXPECT_EQ(grid_fingerprint_2d(k, Box2D{-3, 2, -1, 4}, res).estimated_regions, 1U);
}

TEST(GridFingerprint2D, BelowKanBound) {
  pt::Rng rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const Kan k = pt::random_kan(rng, {.max_width = 3, .max_depth = 2, .max_segments = 2, .input_dim = 2,
                                       .output_dim = 1, .uniform_segments = 2});
    const auto g = grid_fingerprint_2d(k, Box2D{-3, 3, -3, 3}, 32);
    EXPECT_LE(BigInt(g.estimated_regions), kan_region_upper_bound(k));
  }
}

TEST(GridFingerprint2D, CsvAndErrors) {
  const Kan k({KanLayer(2, 1, {PiecewiseLinear::relu(), PiecewiseLinear::relu()})});
  const auto g = grid_fingerprint_2d(k, Box2D{-1, 1, -1, 1}, 8);
  std::ostringstream os;
  g.write_csv(os);
  const std::string csv = os.str();
  EXPECT_EQ(csv.rfind("x,y,fingerprint_id\n", 0), 0U);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 65);
  EXPECT_THROW((void)grid_fingerprint_2d(Kan({KanLayer(1, 1, {fstar()})}), Box2D{}, 16), UnsupportedDimensionError);
  EXPECT_THROW((void)grid_fingerprint_2d(k, Box2D{}, 4), DomainError);
}
