#pragma once

// Cycle-stepped model of the NESTA engine.
//
// Every cycle the CEL network compresses the nine new partial-product sets together with
// the fed-back sum register S (bit i -> column i) and carry buffer CB (bit i -> column i+1).
// Only the generate stage of the final adder runs: for the two CEL output rows a, b the
// engine keeps S = a XOR b and CB = a AND b, so S + 2*CB always equals the running sum
// modulo 2^accumulator_width. Finalization runs the carry-propagate part once (one extra
// cycle).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nesta/bit_matrix.hpp"
#include "nesta/errors.hpp"
#include "nesta/hwc.hpp"
#include "nesta/ppgen.hpp"

namespace nesta::engine {

using ppgen::OperandPair;

struct EngineConfig {
  unsigned operand_width = 16;
  unsigned accumulator_width = 36;
  hwc::Variant cel_variant = hwc::Variant::standard;
  bool signed_mode = true;

  static EngineConfig for_width(unsigned operand_width, hwc::Variant variant = hwc::Variant::standard,
                                bool signed_mode = true) {
    EngineConfig c;
    c.operand_width = operand_width;
    c.accumulator_width = operand_width == 8 ? 20 : 36;
    c.cel_variant = variant;
    c.signed_mode = signed_mode;
    c.validate();
    return c;
  }

  void validate() const {
    const bool ok = (operand_width == 8 && accumulator_width == 20) || (operand_width == 16 && accumulator_width == 36);
    if (!ok) {
      throw DomainError("unsupported engine widths " + std::to_string(operand_width) + "/" +
                        std::to_string(accumulator_width) + " (expected 8/20 or 16/36)");
    }
  }

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct EngineState {
  std::uint64_t s_bits = 0;   // ORU
  std::uint64_t cb_bits = 0;  // CBU, unshifted; bit i feeds column i+1
  std::int64_t cycle = 0;     // consumed batches
  bool finalized = false;
  // Exact running value, kept only to flag accumulator overflow. Results come from the bits.
  std::int64_t monitor = 0;

  friend bool operator==(const EngineState&, const EngineState&) = default;
};

/// Test hook: drop the carries captured at the given cycle.
struct Fault {
  std::int64_t drop_carries_at_cycle = -1;
};

struct FinalizeResult {
  std::int64_t sum = 0;
  EngineState state;
  int extra_cycles = 1;
};

/// Two-operand addition modulo 2^width through a Brent-Kung prefix carry network.
inline std::uint64_t pcpa_add(std::uint64_t a, std::uint64_t b, unsigned width) {
  struct GP {
    bool g;
    bool p;
  };
  std::vector<GP> gp(width);
  for (unsigned i = 0; i < width; ++i) {
    const bool ai = (a >> i) & 1U;
    const bool bi = (b >> i) & 1U;
    gp[i] = {ai && bi, ai != bi};
  }
  const std::vector<GP> local = gp;
  auto combine = [](GP hi, GP lo) { return GP{hi.g || (hi.p && lo.g), hi.p && lo.p}; };
  unsigned top = 1;
  for (; top < width; top *= 2) {
    for (unsigned i = 2 * top - 1; i < width; i += 2 * top) gp[i] = combine(gp[i], gp[i - top]);
  }
  for (unsigned d = top / 2; d >= 1; d /= 2) {
    for (unsigned i = 3 * d - 1; i < width; i += 2 * d) gp[i] = combine(gp[i], gp[i - d]);
  }
  std::uint64_t sum = 0;
  for (unsigned i = 0; i < width; ++i) {
    const bool carry_in = i > 0 && gp[i - 1].g;
    sum |= static_cast<std::uint64_t>(local[i].p != carry_in) << i;
  }
  return sum;
}

class Engine {
 public:
  explicit Engine(EngineConfig config, std::optional<Fault> fault = std::nullopt)
      : config_(config), fault_(fault) {
    config_.validate();
    const auto data = ppgen::layout_heights(config_.operand_width, config_.signed_mode, config_.accumulator_width);
    const std::vector<std::size_t> feedback(config_.accumulator_width, 2);
    network_ = std::make_shared<const hwc::CelNetwork>(
        hwc::build_cel_network(data, config_.cel_variant, feedback, config_.accumulator_width));
    compiled_ = std::make_shared<const hwc::CompiledNetwork>(*network_);
  }

  const EngineConfig& config() const noexcept { return config_; }
  const hwc::CelNetwork& network() const noexcept { return *network_; }

  std::uint64_t mask() const noexcept { return (std::uint64_t{1} << config_.accumulator_width) - 1; }

  std::int64_t min_value() const noexcept {
    return config_.signed_mode ? -(std::int64_t{1} << (config_.accumulator_width - 1)) : 0;
  }
  std::int64_t max_value() const noexcept {
    return config_.signed_mode ? (std::int64_t{1} << (config_.accumulator_width - 1)) - 1
                               : static_cast<std::int64_t>(mask());
  }

  /// Loads the bias into S; CB starts empty.
  EngineState reset(std::int64_t bias = 0) const {
    if (bias < min_value() || bias > max_value()) {
      throw OverflowError("bias " + std::to_string(bias) + " does not fit the " +
                          std::to_string(config_.accumulator_width) + "-bit accumulator");
    }
    EngineState s;
    s.s_bits = static_cast<std::uint64_t>(bias) & mask();
    s.monitor = bias;
    return s;
  }

  /// One cycle: DRU/SEU, CEL compression of data plus S and CB feedback, GEN only.
  EngineState consume_batch(const EngineState& state, std::span<const OperandPair> pairs) const {
    if (state.finalized) throw StateError("engine already finalized");
    const auto pp = ppgen::generate_partial_products(pairs, config_.operand_width, config_.signed_mode);
    BitMatrix input = ppgen::sign_extension_bits(pp, config_.accumulator_width);
    for (unsigned c = 0; c < config_.accumulator_width; ++c) {
      input.push(c, static_cast<Bit>((state.s_bits >> c) & 1U));
      input.push(c, c == 0 ? Bit{0} : static_cast<Bit>((state.cb_bits >> (c - 1)) & 1U));
    }
    const BitMatrix out = compiled_->evaluate(input);

    EngineState next;
    for (unsigned c = 0; c < config_.accumulator_width && c < out.width(); ++c) {
      const auto& col = out.column(c);
      const Bit a = col.size() > 0 ? col[0] : Bit{0};
      const Bit b = col.size() > 1 ? col[1] : Bit{0};
      next.s_bits |= static_cast<std::uint64_t>(a ^ b) << c;
      next.cb_bits |= static_cast<std::uint64_t>(a & b) << c;
    }
    if (fault_ && fault_->drop_carries_at_cycle == state.cycle) next.cb_bits = 0;
    next.cycle = state.cycle + 1;

    std::int64_t contribution = 0;
    for (const auto& p : pairs) contribution += p.w * p.i;
    next.monitor = state.monitor + contribution;
    if (next.monitor < min_value() || next.monitor > max_value()) {
      throw OverflowError("accumulated value " + std::to_string(next.monitor) + " leaves the " +
                          std::to_string(config_.accumulator_width) + "-bit accumulator range at cycle " +
                          std::to_string(next.cycle));
    }
    return next;
  }

  /// (S + 2*CB) mod 2^acc, read as signed in signed mode.
  std::int64_t partial_value(const EngineState& state) const {
    return interpret((state.s_bits + (state.cb_bits << 1)) & mask());
  }

  /// PCPA: exact sum of S and the shifted carries. Costs one extra cycle.
  FinalizeResult finalize(const EngineState& state) const {
    if (state.finalized) throw StateError("engine already finalized");
    const std::uint64_t sum = pcpa_add(state.s_bits, (state.cb_bits << 1) & mask(), config_.accumulator_width);
    FinalizeResult r;
    r.state = state;
    r.state.s_bits = sum;
    r.state.cb_bits = 0;
    r.state.finalized = true;
    r.sum = interpret(sum);
    return r;
  }

 private:
  std::int64_t interpret(std::uint64_t bits) const {
    if (config_.signed_mode && ((bits >> (config_.accumulator_width - 1)) & 1U)) {
      return static_cast<std::int64_t>(bits) - (std::int64_t{1} << config_.accumulator_width);
    }
    return static_cast<std::int64_t>(bits);
  }

  EngineConfig config_;
  std::optional<Fault> fault_;
  std::shared_ptr<const hwc::CelNetwork> network_;
  std::shared_ptr<const hwc::CompiledNetwork> compiled_;
};

struct BatchSchedule {
  std::vector<ppgen::Batch> batches;
  std::size_t kernel = 0;
  std::size_t channels = 0;
  std::size_t pad_count = 0;
};

/// Chops an R*R*C pair stream (any order) into 9-pair batches, zero-padding the last.
/// Fully connected layers enter as 1x1 streams.
inline BatchSchedule batch_schedule(std::size_t kernel, std::size_t channels, std::span<const OperandPair> stream) {
  if (kernel == 0 || channels == 0) throw DomainError("kernel and channels must be positive");
  const std::size_t expected = kernel * kernel * channels;
  if (stream.size() != expected) {
    throw ShapeError("pair stream holds " + std::to_string(stream.size()) + " pairs, expected " +
                     std::to_string(expected));
  }
  BatchSchedule s;
  s.kernel = kernel;
  s.channels = channels;
  const std::size_t count = (expected + ppgen::kBatchSize - 1) / ppgen::kBatchSize;
  s.batches.resize(count);
  for (std::size_t k = 0; k < expected; ++k) s.batches[k / ppgen::kBatchSize][k % ppgen::kBatchSize] = stream[k];
  s.pad_count = count * ppgen::kBatchSize - expected;
  return s;
}

}  // namespace nesta::engine
