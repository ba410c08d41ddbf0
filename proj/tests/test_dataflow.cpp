#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "nesta/dataflow.hpp"

using namespace nesta;
using namespace nesta::dataflow;

namespace {

struct Layer {
  LayerShape shape;
  Tensor4 ifmap;
  Tensor4 filters;
  std::vector<std::int64_t> bias;
};

Layer random_layer(std::mt19937_64& rng, LayerShape s, std::int64_t lo = -100, std::int64_t hi = 100) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  Layer l{s, Tensor4(s.N, s.C, s.H, s.H), Tensor4(s.M, s.C, s.R, s.R), std::vector<std::int64_t>(s.M)};
  for (auto& v : l.ifmap.data()) v = d(rng);
  for (auto& v : l.filters.data()) v = d(rng);
  for (auto& v : l.bias) v = d(rng);
  return l;
}

}  // namespace

TEST(LoopOrder, ParseAndPrint) {
  EXPECT_EQ(LoopOrder::parse("b-u-c-h-w-i-j"), LoopOrder());
  EXPECT_EQ(LoopOrder::parse("buhwcij").to_string(), "b-u-h-w-c-i-j");
  EXPECT_THROW(LoopOrder::parse("b-u-c-h-w-i"), DomainError);
  EXPECT_THROW(LoopOrder::parse("b-u-c-h-w-i-i"), DomainError);
  EXPECT_THROW(LoopOrder::parse("b-u-c-h-w-i-x"), DomainError);
}

TEST(LoopOrder, Defaults) {
  EXPECT_EQ(default_order(Kind::NLR).to_string(), "b-u-c-h-w-i-j");
  EXPECT_EQ(default_order(Kind::WS).to_string(), "b-u-c-h-w-i-j");
  EXPECT_EQ(default_order(Kind::RS).to_string(), "b-u-c-h-w-i-j");
  EXPECT_EQ(default_order(Kind::OS).to_string(), "b-u-h-w-c-i-j");
  EXPECT_EQ(default_order(Kind::IS).to_string(), "b-u-h-w-c-i-j");
}

TEST(Schedule, SingleTuple) {
  const auto t = enumerate_schedule(LayerShape::make(1, 1, 1, 1, 1), LoopOrder());
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], Tuple{});
}

TEST(Schedule, CountIsProductOfExtents) {
  const auto s = LayerShape::make(1, 2, 3, 27, 11, 4);
  std::int64_t n = 0;
  for_each_tuple(s, LoopOrder(), [&](const Tuple&) { ++n; });
  EXPECT_EQ(n, 1 * 2 * 3 * 5 * 5 * 11 * 11);
}

TEST(Schedule, OrdersGiveSameMultiset) {
  const auto s = LayerShape::make(2, 2, 2, 4, 2);
  auto a = enumerate_schedule(s, LoopOrder());
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const auto order = random_loop_order(rng);
    auto b = enumerate_schedule(s, order);
    EXPECT_NE(b.size(), 0u);
    std::sort(b.begin(), b.end());
    std::sort(a.begin(), a.end());
    ASSERT_EQ(a, b) << order.to_string();
  }
}

TEST(Schedule, InnermostLoopVariesFastest) {
  const auto t = enumerate_schedule(LayerShape::make(1, 1, 2, 3, 2), LoopOrder::parse("b-u-h-w-i-j-c"));
  EXPECT_EQ(t[0].c, 0);
  EXPECT_EQ(t[1].c, 1);
  EXPECT_EQ(t[1].j, 0);
  EXPECT_EQ(t[2].j, 1);
}

TEST(Access, WeightStationaryFetchesEachWeightOnce) {
  const auto s = LayerShape::make(2, 4, 3, 8, 3);
  const auto ws = access_counts(s, DataflowKind::make(Kind::WS));
  const auto nlr = access_counts(s, DataflowKind::make(Kind::NLR));
  EXPECT_EQ(ws.weight_fetches, 4 * 3 * 9);
  EXPECT_EQ(nlr.weight_fetches, s.macs());
  EXPECT_EQ(nlr.psum_writes, s.outputs() * 3);
  EXPECT_EQ(ws.psum_writes, s.outputs());
}

TEST(Access, RowStationaryByHand) {
  // E = 4, groups of 3 -> one full group and one single. Per channel: 3*(3+2) = 15 and 3*3 = 9.
  const auto s = LayerShape::make(1, 1, 2, 6, 3);
  const auto rs = access_counts(s, DataflowKind::make(Kind::RS));
  EXPECT_EQ(rs.ifmap_fetches, 4 * 2 * (15 + 9));
  EXPECT_EQ(rs.weight_fetches, 4 * 2 * 2 * 9);
  EXPECT_EQ(rs.psum_writes, 16);
}

TEST(Access, DegenerateShapeIsKindIndependent) {
  const auto s = LayerShape::make(1, 1, 1, 3, 3);
  const auto base = access_counts(s, DataflowKind::make(Kind::OS));
  for (auto k : kAllKinds) {
    const auto st = access_counts(s, DataflowKind::make(k));
    EXPECT_EQ(st.transactions(), base.transactions()) << to_string(k);
  }
}

TEST(Access, NlrDominatesAndRsWritesFewerPsums) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 500; ++t) {
    const std::int64_t r = 1 + static_cast<std::int64_t>(rng() % 5);
    const std::int64_t stride = 1 + static_cast<std::int64_t>(rng() % 3);
    const std::int64_t e = 1 + static_cast<std::int64_t>(rng() % 6);
    const auto s = LayerShape::make(1 + rng() % 2, 1 + rng() % 4, 1 + rng() % 8, (e - 1) * stride + r, r, stride);
    const auto nlr = access_counts(s, DataflowKind::make(Kind::NLR));
    for (auto k : kAllKinds) ASSERT_GE(nlr.transactions(), access_counts(s, DataflowKind::make(k)).transactions());
    ASSERT_LE(access_counts(s, DataflowKind::make(Kind::RS)).psum_writes,
              access_counts(s, DataflowKind::make(Kind::OS)).psum_writes);
  }
}

TEST(Engines, RowStationaryBatchesPerOutput) {
  std::mt19937_64 rng(1);
  const auto three = random_layer(rng, LayerShape::make(1, 1, 5, 5, 3));
  const auto cfg = engine::EngineConfig::for_width(16);
  const auto run = run_conv_with_engines(three.shape, DataflowKind::make(Kind::RS), cfg, three.ifmap, three.filters, three.bias);
  EXPECT_EQ(run.stats.batches_consumed, 9 * 5);
  EXPECT_EQ(run.stats.cycles_per_output, 6);

  const auto five = random_layer(rng, LayerShape::make(1, 1, 1, 5, 5));
  const auto r5 = run_conv_with_engines(five.shape, DataflowKind::make(Kind::RS), cfg, five.ifmap, five.filters, five.bias);
  EXPECT_EQ(r5.stats.batches_consumed, 3);
}

TEST(Engines, EveryKindMatchesOracle) {
  std::mt19937_64 rng(2);
  const auto cfg = engine::EngineConfig::for_width(16);
  for (int t = 0; t < 20; ++t) {
    const std::int64_t r = std::array<std::int64_t, 3>{1, 3, 5}[rng() % 3];
    const std::int64_t h = r + static_cast<std::int64_t>(rng() % 3);
    const auto l = random_layer(rng, LayerShape::make(1, 1 + rng() % 3, 1 + rng() % 4, h, r));
    const auto expected = oracle::conv_layer(l.ifmap, l.filters, l.bias, l.shape);
    for (auto k : kAllKinds) {
      const auto run = run_conv_with_engines(l.shape, DataflowKind::make(k), cfg, l.ifmap, l.filters, l.bias);
      ASSERT_EQ(run.ofmap, expected) << to_string(k);
      const auto fin_per_output = k == Kind::NLR ? batches_per_output(l.shape) : 1;
      ASSERT_EQ(run.stats.psum_writes, l.shape.outputs() * fin_per_output);
    }
    DataflowKind custom = DataflowKind::make(Kind::OS);
    custom.order = random_loop_order(rng);
    ASSERT_EQ(run_conv_with_engines(l.shape, custom, cfg, l.ifmap, l.filters, l.bias).ofmap, expected);
  }
}

TEST(Engines, SizingGate) {
  std::mt19937_64 rng(3);
  auto l = random_layer(rng, LayerShape::make(1, 1, 2, 3, 3));
  l.filters.data()[0] = 300;  // needs 10 bits in an 8-bit engine
  EXPECT_THROW(run_conv_with_engines(l.shape, DataflowKind::make(Kind::WS), engine::EngineConfig::for_width(8),
                                     l.ifmap, l.filters, l.bias),
               SizingError);
}

TEST(Engines, DimensionMismatch) {
  std::mt19937_64 rng(3);
  auto l = random_layer(rng, LayerShape::make(1, 1, 2, 3, 3));
  const auto other = LayerShape::make(1, 1, 3, 3, 3);
  EXPECT_THROW(run_conv_with_engines(other, DataflowKind::make(Kind::WS), engine::EngineConfig::for_width(16),
                                     l.ifmap, l.filters, l.bias),
               ShapeError);
}

TEST(Padding, ZeroBorder) {
  Tensor4 in(1, 1, 2, 2, 7);
  const auto p = zero_pad(in, 1);
  EXPECT_EQ(p.dims(), (std::array<std::size_t, 4>{1, 1, 4, 4}));
  EXPECT_EQ(p(0, 0, 0, 0), 0);
  EXPECT_EQ(p(0, 0, 1, 1), 7);
  EXPECT_EQ(p(0, 0, 2, 2), 7);
  EXPECT_EQ(p(0, 0, 3, 3), 0);
}

TEST(Bits, RequiredWidth) {
  EXPECT_EQ(required_bits(0, true), 1);
  EXPECT_EQ(required_bits(-1, true), 1);
  EXPECT_EQ(required_bits(127, true), 8);
  EXPECT_EQ(required_bits(-128, true), 8);
  EXPECT_EQ(required_bits(128, true), 9);
  EXPECT_EQ(required_bits(255, false), 8);
  EXPECT_THROW(required_bits(-1, false), DomainError);
}
