#pragma once

// Randomized engine-versus-oracle trials. Every trial is a single-output convolution drawn
// from its own generator, seeded by splitmix64(seed, trial index), so any failure replays
// from (seed, index) alone.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "nesta/costmodel.hpp"
#include "nesta/engine.hpp"
#include "nesta/hwc.hpp"
#include "nesta/oracle.hpp"
#include "nesta/ppgen.hpp"

namespace nesta::verify {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

inline constexpr std::int64_t kKernels[] = {1, 3, 5, 11};

struct VerifyConfig {
  std::uint64_t seed = 42;
  std::int64_t trials = 10000;
  unsigned width = 0;                // 0: 8 or 16 per trial
  std::optional<bool> signed_mode;   // unset: random per trial
  hwc::Variant variant = hwc::Variant::standard;
  std::optional<engine::Fault> fault;
  std::int64_t max_channels = 32;
};

struct Trial {
  std::uint64_t seed = 0;
  std::int64_t index = 0;
  unsigned width = 16;
  bool signed_mode = true;
  std::int64_t kernel = 1;
  std::int64_t channels = 1;
  int w_weight = 1;
  int w_data = 1;
  std::int64_t bias = 0;
  oracle::Tensor4 ifmap;    // 1 x C x R x R
  oracle::Tensor4 filters;  // 1 x C x R x R

  /// Pairs in c, i, j order.
  std::vector<ppgen::OperandPair> stream() const {
    std::vector<ppgen::OperandPair> s;
    const auto C = static_cast<std::size_t>(channels);
    const auto R = static_cast<std::size_t>(kernel);
    s.reserve(C * R * R);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < R; ++j) s.push_back({filters(0, c, i, j), ifmap(0, c, i, j)});
      }
    }
    return s;
  }

  oracle::LayerShape shape() const { return oracle::LayerShape{1, 1, channels, kernel, kernel, 1}; }
};

inline unsigned accumulator_for(unsigned width) { return width == 8 ? 20 : 36; }

inline Trial make_trial(const VerifyConfig& config, std::int64_t index) {
  Trial t;
  t.seed = config.seed;
  t.index = index;
  std::mt19937_64 rng(trial_seed(config.seed, static_cast<std::uint64_t>(index)));
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };

  t.width = config.width != 0 ? config.width : (pick(0, 1) ? 16U : 8U);
  t.signed_mode = config.signed_mode.value_or(pick(0, 1) == 1);
  t.kernel = kKernels[pick(0, 3)];
  const unsigned acc = accumulator_for(t.width);
  t.channels = pick(1, config.max_channels);
  std::vector<std::pair<int, int>> pairs;
  while (true) {
    pairs = cost::valid_width_pairs(static_cast<int>(acc), t.channels, t.kernel * t.kernel, static_cast<int>(t.width));
    if (!pairs.empty() || t.channels == 1) break;
    t.channels /= 2;
  }
  if (pairs.empty()) throw DomainError("no admissible operand widths for this trial shape");
  const auto [ww, wd] = pairs[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(pairs.size()) - 1))];
  t.w_weight = ww;
  t.w_data = wd;

  const bool extreme = pick(0, 7) == 0;
  auto operand = [&](int bits) {
    const std::int64_t lo = ppgen::operand_min(static_cast<unsigned>(bits), t.signed_mode);
    const std::int64_t hi = ppgen::operand_max(static_cast<unsigned>(bits), t.signed_mode);
    if (extreme) return pick(0, 1) ? lo : hi;
    return pick(lo, hi);
  };
  const auto C = static_cast<std::size_t>(t.channels);
  const auto R = static_cast<std::size_t>(t.kernel);
  t.ifmap = oracle::Tensor4(1, C, R, R);
  t.filters = oracle::Tensor4(1, C, R, R);
  for (auto& v : t.filters.data()) v = operand(ww);
  for (auto& v : t.ifmap.data()) v = operand(wd);

  if (pick(0, 3) != 0) {
    if (t.signed_mode) {
      const std::int64_t lim = (std::int64_t{1} << (acc - 2)) - 1;
      t.bias = pick(-lim, lim);
    } else {
      const std::int64_t max_sum = t.kernel * t.kernel * t.channels * ((std::int64_t{1} << ww) - 1) *
                                   ((std::int64_t{1} << wd) - 1);
      const std::int64_t room = (std::int64_t{1} << acc) - 1 - max_sum;
      t.bias = room > 0 ? pick(0, room) : 0;
    }
  }
  return t;
}

struct Counterexample {
  std::uint64_t seed = 0;
  std::int64_t trial = 0;
  std::int64_t batch = 0;  // -1: final sum
  std::int64_t expected = 0;
  std::int64_t actual = 0;
  std::string detail;

  std::string describe() const {
    std::ostringstream os;
    os << "seed=" << seed << " trial=" << trial << " batch=" << batch << " expected=" << expected
       << " actual=" << actual;
    if (!detail.empty()) os << " (" << detail << ")";
    return os.str();
  }
};

struct TrialOutcome {
  std::int64_t cycles = 0;
  std::optional<Counterexample> failure;
};

/// Streams the trial through the engine, checking the running sum after every batch and the
/// finalized sum against the direct convolution.
inline TrialOutcome run_trial(const Trial& t, const engine::Engine& eng) {
  TrialOutcome out;
  auto fail = [&](std::int64_t batch, std::int64_t expected, std::int64_t actual, std::string detail) {
    out.failure = Counterexample{t.seed, t.index, batch, expected, actual, std::move(detail)};
    return out;
  };
  const auto stream = t.stream();
  const auto schedule = engine::batch_schedule(static_cast<std::size_t>(t.kernel), static_cast<std::size_t>(t.channels),
                                               stream);
  const std::vector<std::int64_t> bias{t.bias};
  const std::int64_t expected = oracle::conv_layer(t.ifmap, t.filters, bias, t.shape())(0, 0, 0, 0);

  try {
    engine::EngineState state = eng.reset(t.bias);
    std::int64_t running = t.bias;
    for (std::size_t k = 0; k < schedule.batches.size(); ++k) {
      state = eng.consume_batch(state, schedule.batches[k]);
      ++out.cycles;
      for (const auto& p : schedule.batches[k]) running = oracle::mac_reference(running, p.w, p.i);
      const std::int64_t partial = eng.partial_value(state);
      if (partial != running) return fail(static_cast<std::int64_t>(k), running, partial, "partial sum");
    }
    const auto fin = eng.finalize(state);
    if (fin.sum != expected) return fail(-1, expected, fin.sum, "final sum");
  } catch (const std::exception& e) {
    return fail(-1, expected, 0, e.what());
  }
  return out;
}

struct VerifyReport {
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  std::int64_t cycles_checked = 0;
  std::optional<Counterexample> first_failure;  // lowest trial index

  bool pass() const { return failures == 0; }
};

class EngineCache {
 public:
  EngineCache(hwc::Variant variant, std::optional<engine::Fault> fault) : variant_(variant), fault_(fault) {}

  const engine::Engine& get(unsigned width, bool signed_mode) {
    const auto key = std::make_tuple(width, signed_mode);
    auto it = engines_.find(key);
    if (it == engines_.end()) {
      it = engines_.emplace(key, engine::Engine(engine::EngineConfig::for_width(width, variant_, signed_mode), fault_))
               .first;
    }
    return it->second;
  }

 private:
  hwc::Variant variant_;
  std::optional<engine::Fault> fault_;
  std::map<std::tuple<unsigned, bool>, engine::Engine> engines_;
};

inline VerifyReport run_verify(const VerifyConfig& config) {
  if (config.trials < 1) throw DomainError("trials must be at least 1");
  if (config.width != 0 && config.width != 8 && config.width != 16) throw DomainError("width must be 8 or 16");
  EngineCache cache(config.variant, config.fault);
  VerifyReport report;
  for (std::int64_t k = 0; k < config.trials; ++k) {
    const Trial t = make_trial(config, k);
    const auto outcome = run_trial(t, cache.get(t.width, t.signed_mode));
    ++report.trials;
    report.cycles_checked += outcome.cycles;
    if (outcome.failure) {
      ++report.failures;
      if (!report.first_failure) report.first_failure = outcome.failure;
    }
  }
  return report;
}

}  // namespace nesta::verify
