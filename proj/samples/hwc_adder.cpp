// Plans the 9-operand 16-bit HWC adder in both variants and adds nine random numbers with it.

#include <cstdio>
#include <random>

#include "nesta/hwc.hpp"

int main() {
  using namespace nesta;
  for (auto variant : {hwc::Variant::standard, hwc::Variant::star}) {
    const auto net = hwc::multi_operand_adder(9, 16, variant);
    const auto depth = hwc::logic_levels(net);
    std::printf("%s: %zu layers, %zu compressors, depth %zu\n", hwc::to_string(variant), net.layers().size(),
                net.compressor_count(), depth.total);
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      std::printf("  CEL-%zu: widest C(%zu:%zu), depth %zu\n", k + 1, hwc::max_compressor_inputs(net, k),
                  hwc::output_width(hwc::max_compressor_inputs(net, k)), depth.per_layer[k]);
    }

    std::mt19937_64 rng(7);
    std::vector<std::uint64_t> ops(9);
    std::uint64_t expected = 0;
    for (auto& v : ops) {
      v = rng() & 0xffff;
      expected += v;
    }
    const auto out = hwc::evaluate_network(net, BitMatrix::from_rows(ops, 16));
    std::printf("  sum of nine operands: %lld (expected %llu)\n", static_cast<long long>(out.value()),
                static_cast<unsigned long long>(expected));
  }
}
