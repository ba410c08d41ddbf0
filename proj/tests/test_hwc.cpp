#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "nesta/hwc.hpp"

using namespace nesta;
using namespace nesta::hwc;

namespace {

// Weighted bit-sum straight from the stacks, independent of BitMatrix::value.
std::uint64_t weighted_sum(const std::vector<BitStack>& cols, unsigned mod_bits = 64) {
  std::uint64_t v = 0;
  for (std::size_t c = 0; c < cols.size() && c < mod_bits; ++c) {
    for (Bit b : cols[c]) v += static_cast<std::uint64_t>(b) << c;
  }
  return mod_bits >= 64 ? v : v & ((std::uint64_t{1} << mod_bits) - 1);
}

BitMatrix random_matrix(std::mt19937_64& rng, const std::vector<std::size_t>& heights) {
  std::vector<BitStack> cols(heights.size());
  for (std::size_t c = 0; c < heights.size(); ++c) {
    for (std::size_t s = 0; s < heights[c]; ++s) cols[c].push_back(static_cast<Bit>(rng() & 1U));
  }
  return BitMatrix(cols);
}

}  // namespace

TEST(Compressor, OutputWidth) {
  EXPECT_EQ(output_width(1), 1u);
  EXPECT_EQ(output_width(3), 2u);
  EXPECT_EQ(output_width(7), 3u);
  EXPECT_EQ(output_width(9), 4u);
  EXPECT_EQ(output_width(15), 4u);
  EXPECT_EQ(output_width(16), 5u);
  EXPECT_THROW(output_width(0), DomainError);
}

TEST(Compressor, Completeness) {
  for (std::size_t m : {1, 3, 7, 15, 31}) EXPECT_TRUE(is_complete(m)) << m;
  for (std::size_t m : {2, 4, 5, 6, 9, 14}) EXPECT_FALSE(is_complete(m)) << m;
  EXPECT_THROW(is_complete(0), DomainError);
}

TEST(Compressor, CompressColumnIsPopcount) {
  const BitStack seven{1, 1, 1, 1, 1, 1, 1};
  EXPECT_EQ(compress_column(seven), (BitStack{1, 1, 1}));
  const BitStack nine{1, 0, 1, 0, 1, 0, 1, 0, 1};
  EXPECT_EQ(compress_column(nine), (BitStack{1, 0, 1, 0}));
  EXPECT_THROW(compress_column(BitStack{}), DomainError);
  EXPECT_THROW(compress_column(BitStack{2}), DomainError);
}

TEST(Compressor, ExhaustiveSmallStacks) {
  for (std::size_t m = 1; m <= 10; ++m) {
    for (std::uint32_t pattern = 0; pattern < (1U << m); ++pattern) {
      BitStack bits(m);
      for (std::size_t k = 0; k < m; ++k) bits[k] = static_cast<Bit>((pattern >> k) & 1U);
      const auto out = compress_column(bits);
      std::uint32_t v = 0;
      for (std::size_t k = 0; k < out.size(); ++k) v |= static_cast<std::uint32_t>(out[k]) << k;
      ASSERT_EQ(v, static_cast<std::uint32_t>(std::popcount(pattern)));
    }
  }
}

TEST(CelNetwork, StandardFirstLayerOfNineBySixteen) {
  const auto net = multi_operand_adder(9, 16, Variant::standard);
  ASSERT_GE(net.layers().size(), 2u);
  EXPECT_EQ(net.layers()[0].size(), 16u);
  for (const auto& comp : net.layers()[0]) EXPECT_EQ(comp.m, 9u);
  // Each column's C(9:4) spreads over four columns: heights after CEL-1 by hand.
  const std::vector<std::size_t> expected{1, 2, 3, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 3, 2, 1};
  EXPECT_EQ(net.stage_heights()[1], expected);
  for (auto h : net.stage_heights().back()) EXPECT_LE(h, 2u);
}

TEST(CelNetwork, StarUsesCompleteCompressorsInFirstLayer) {
  const auto net = multi_operand_adder(9, 16, Variant::star);
  for (const auto& comp : net.layers()[0]) EXPECT_TRUE(comp.complete());
  EXPECT_EQ(max_compressor_inputs(net, 0), 7u);
  EXPECT_EQ(max_compressor_inputs(multi_operand_adder(9, 16, Variant::standard), 0), 9u);
  EXPECT_LT(logic_levels(net).per_layer[0], logic_levels(multi_operand_adder(9, 16, Variant::standard)).per_layer[0]);
}

TEST(CelNetwork, StarDefersLeftovers) {
  const std::vector<std::size_t> h{9};
  const auto net = build_cel_network(h, Variant::star);
  ASSERT_EQ(net.layers()[0].size(), 1u);
  EXPECT_EQ(net.layers()[0][0].m, 7u);
  // 2 leftovers stay in column 0 plus the C(7:3) output bit.
  EXPECT_EQ(net.stage_heights()[1][0], 3u);
}

TEST(CelNetwork, FeedbackJoinsRoomiestCompressor) {
  const std::vector<std::size_t> h{5};
  const std::vector<std::size_t> fb{1};
  const auto net = build_cel_network(h, Variant::standard, fb);
  ASSERT_EQ(net.layers()[0].size(), 1u);
  EXPECT_EQ(net.layers()[0][0].m, 6u);
  EXPECT_EQ(net.layers()[0][0].n, 3u);
}

TEST(CelNetwork, FeedbackWithoutCompressorWiresTwiceIntoLowerColumn) {
  const std::vector<std::size_t> h{5, 0};
  const std::vector<std::size_t> fb{0, 1};
  const auto net = build_cel_network(h, Variant::standard, fb);
  const auto& comp = net.layers()[0][0];
  EXPECT_EQ(comp.m, 7u);
  EXPECT_EQ(comp.inputs[5], (BitRef{1, 0}));
  EXPECT_EQ(comp.inputs[6], (BitRef{1, 0}));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto in = random_matrix(rng, net.capacity());
    EXPECT_EQ(weighted_sum(evaluate_network(net, in).columns()), weighted_sum(in.columns()));
  }
}

TEST(CelNetwork, StarKeepsFeedbackOutOfFirstLayer) {
  const std::vector<std::size_t> h{7, 7};
  const std::vector<std::size_t> fb{2, 2};
  const auto net = build_cel_network(h, Variant::star, fb);
  for (const auto& comp : net.layers()[0]) {
    EXPECT_EQ(comp.m, 7u);
    for (const auto& ref : comp.inputs) EXPECT_LT(ref.slot, 7u);
  }
}

TEST(CelNetwork, Errors) {
  const std::vector<std::size_t> zero{0, 0};
  EXPECT_THROW(build_cel_network(zero, Variant::standard), DomainError);
  const std::vector<std::size_t> h{4};
  const std::vector<std::size_t> fb{3};
  EXPECT_THROW(build_cel_network(h, Variant::standard, fb), DomainError);
  const std::vector<std::size_t> wide{3, 3, 3};
  EXPECT_THROW(build_cel_network(wide, Variant::standard, {}, 2), DomainError);
}

TEST(CelNetwork, OverfullColumnIsRejected) {
  const auto net = multi_operand_adder(9, 4, Variant::standard);
  BitMatrix in(4);
  for (int k = 0; k < 10; ++k) in.push(2, 1);
  try {
    evaluate_network(net, in);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(CompiledNetwork(net).evaluate(in), CapacityError);
}

TEST(CelNetwork, ShortColumnsArePaddedWithZeros) {
  const auto net = multi_operand_adder(9, 4, Variant::standard);
  BitMatrix in(2);
  in.push(0, 1);
  in.push(1, 1);
  EXPECT_EQ(weighted_sum(evaluate_network(net, in).columns()), 3u);
}

class Conservation : public ::testing::TestWithParam<Variant> {};

TEST_P(Conservation, EveryLayerPreservesWeightedSum) {
  std::mt19937_64 rng(GetParam() == Variant::standard ? 11 : 12);
  for (int t = 0; t < 300; ++t) {
    const std::size_t width = 1 + rng() % 20;
    std::vector<std::size_t> heights(width);
    std::vector<std::size_t> fb(width);
    for (auto& h : heights) h = rng() % 40;
    for (auto& f : fb) f = rng() % 3;
    heights[0] += 1;
    const auto net = build_cel_network(heights, GetParam(), fb);
    const auto in = random_matrix(rng, net.capacity());
    const auto trace = evaluate_trace(net, in);
    const auto v = weighted_sum(in.columns());
    for (const auto& stage : trace) ASSERT_EQ(weighted_sum(stage.columns()), v);
    ASSERT_LE(trace.back().max_height(), 2u);
    ASSERT_EQ(CompiledNetwork(net).evaluate(in), trace.back());
  }
}

TEST_P(Conservation, WidthLimitedNetworkIsModular) {
  std::mt19937_64 rng(GetParam() == Variant::standard ? 21 : 22);
  for (int t = 0; t < 200; ++t) {
    const std::size_t width = 4 + rng() % 12;
    std::vector<std::size_t> heights(width);
    for (auto& h : heights) h = 1 + rng() % 30;
    const std::vector<std::size_t> fb(width, 2);
    const auto net = build_cel_network(heights, GetParam(), fb, width);
    const auto in = random_matrix(rng, net.capacity());
    const auto out = evaluate_network(net, in);
    ASSERT_LE(out.width(), width);
    ASSERT_EQ(weighted_sum(out.columns(), static_cast<unsigned>(width)),
              weighted_sum(in.columns(), static_cast<unsigned>(width)));
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, Conservation, ::testing::Values(Variant::standard, Variant::star),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Depth, SumOfDeepestCompressorPerLayer) {
  const std::vector<std::size_t> h{3};
  const auto net = build_cel_network(h, Variant::standard);
  const auto d = logic_levels(net);
  ASSERT_EQ(d.per_layer.size(), 1u);
  EXPECT_EQ(d.per_layer[0], 2u);
  EXPECT_EQ(d.total, 2u);
}

TEST(Variant, ParseAndPrint) {
  EXPECT_EQ(parse_variant("star"), Variant::star);
  EXPECT_STREQ(to_string(Variant::standard), "standard");
  EXPECT_THROW(parse_variant("dadda"), DomainError);
}
