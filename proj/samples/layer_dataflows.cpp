// Runs one small layer under every dataflow and prints the global-buffer traffic of each.

#include <cstdio>
#include <random>
#include <vector>

#include "nesta/dataflow.hpp"

int main() {
  using namespace nesta;
  const auto shape = oracle::LayerShape::make(1, 4, 8, 9, 3);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> dist(-128, 127);
  oracle::Tensor4 ifmap(1, 8, 9, 9);
  oracle::Tensor4 filters(4, 8, 3, 3);
  for (auto& v : ifmap.data()) v = dist(rng);
  for (auto& v : filters.data()) v = dist(rng);
  const std::vector<std::int64_t> bias{1, -2, 3, -4};
  const auto expected = oracle::conv_layer(ifmap, filters, bias, shape);

  const auto config = engine::EngineConfig::for_width(16);
  std::printf("flow  ifmap  weight  psum  batches  match\n");
  for (auto kind : dataflow::kAllKinds) {
    const auto run = dataflow::run_conv_with_engines(shape, dataflow::DataflowKind::make(kind), config, ifmap, filters, bias);
    std::printf("%-4s %6lld %7lld %5lld %8lld  %s\n", dataflow::to_string(kind),
                static_cast<long long>(run.stats.ifmap_fetches), static_cast<long long>(run.stats.weight_fetches),
                static_cast<long long>(run.stats.psum_writes), static_cast<long long>(run.stats.batches_consumed),
                run.ofmap == expected ? "yes" : "NO");
  }
}
