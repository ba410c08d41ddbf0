// Streams a 3x3 convolution over four channels through the engine and prints S, CB and the
// running value after every batch, then the finalized sum.

#include <cstdio>
#include <random>
#include <vector>

#include "nesta/engine.hpp"

int main() {
  using namespace nesta;
  const engine::Engine eng(engine::EngineConfig::for_width(16));
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> dist(-2048, 2047);

  std::vector<ppgen::OperandPair> stream(3 * 3 * 4);
  std::int64_t expected = 100;
  for (auto& p : stream) {
    p = {dist(rng), dist(rng)};
    expected += p.w * p.i;
  }
  const auto sched = engine::batch_schedule(3, 4, stream);

  auto state = eng.reset(100);
  for (const auto& batch : sched.batches) {
    state = eng.consume_batch(state, batch);
    std::printf("cycle %lld: S=%09llx CB=%09llx value=%lld\n", static_cast<long long>(state.cycle),
                static_cast<unsigned long long>(state.s_bits), static_cast<unsigned long long>(state.cb_bits),
                static_cast<long long>(eng.partial_value(state)));
  }
  const auto fin = eng.finalize(state);
  std::printf("final (+%d cycle): %lld, expected %lld\n", fin.extra_cycles, static_cast<long long>(fin.sum),
              static_cast<long long>(expected));
  return fin.sum == expected ? 0 : 1;
}
