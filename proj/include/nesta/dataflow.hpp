#pragma once

// Seven-nested-loop convolution schedules, the five dataflow classes, global-buffer access
// counting and engine-backed execution of a whole layer.
//
// Counting model: the stationary operand class of a dataflow is fetched once per residency
// window, every other operand once per multiply-accumulate. One engine owns one output
// neuron until it is finished, so partial sums are written once per output except under
// NLR, which writes the partial sum back after every batch.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nesta/costmodel.hpp"
#include "nesta/engine.hpp"
#include "nesta/errors.hpp"
#include "nesta/oracle.hpp"

namespace nesta::dataflow {

using oracle::LayerShape;
using oracle::Tensor4;

enum class Loop : std::uint8_t { b, u, c, h, w, i, j };

inline constexpr std::array<char, 7> kLoopNames = {'b', 'u', 'c', 'h', 'w', 'i', 'j'};

class LoopOrder {
 public:
  LoopOrder() : loops_{Loop::b, Loop::u, Loop::c, Loop::h, Loop::w, Loop::i, Loop::j} {}
  explicit LoopOrder(std::array<Loop, 7> loops) : loops_(loops) { validate(); }

  /// "b-u-c-h-w-i-j" or "bucwhij".
  static LoopOrder parse(const std::string& text) {
    std::array<Loop, 7> loops{};
    std::size_t n = 0;
    for (char ch : text) {
      if (ch == '-' || ch == ',' || ch == ' ') continue;
      const auto* it = std::find(kLoopNames.begin(), kLoopNames.end(), ch);
      if (it == kLoopNames.end()) throw DomainError("unknown loop identifier '" + std::string(1, ch) + "'");
      if (n == loops.size()) throw DomainError("loop order '" + text + "' has more than 7 loops");
      loops[n++] = static_cast<Loop>(it - kLoopNames.begin());
    }
    if (n != loops.size()) throw DomainError("loop order '" + text + "' must list all 7 loops");
    return LoopOrder(loops);
  }

  const std::array<Loop, 7>& loops() const noexcept { return loops_; }

  std::string to_string() const {
    std::string s;
    for (std::size_t k = 0; k < loops_.size(); ++k) {
      if (k) s += '-';
      s += kLoopNames[static_cast<std::size_t>(loops_[k])];
    }
    return s;
  }

  friend bool operator==(const LoopOrder&, const LoopOrder&) = default;

 private:
  void validate() const {
    std::array<bool, 7> seen{};
    for (Loop l : loops_) {
      const auto k = static_cast<std::size_t>(l);
      if (k >= seen.size() || seen[k]) throw DomainError("loop order is not a permutation of b,u,c,h,w,i,j");
      seen[k] = true;
    }
  }

  std::array<Loop, 7> loops_;
};

template <class Rng>
LoopOrder random_loop_order(Rng& rng) {
  std::array<Loop, 7> loops{Loop::b, Loop::u, Loop::c, Loop::h, Loop::w, Loop::i, Loop::j};
  std::shuffle(loops.begin(), loops.end(), rng);
  return LoopOrder(loops);
}

enum class Kind { NLR, WS, IS, OS, RS };

inline constexpr std::array<Kind, 5> kAllKinds = {Kind::NLR, Kind::WS, Kind::IS, Kind::OS, Kind::RS};

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::NLR: return "NLR";
    case Kind::WS: return "WS";
    case Kind::IS: return "IS";
    case Kind::OS: return "OS";
    case Kind::RS: return "RS";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (Kind k : kAllKinds) {
    if (s == to_string(k)) return k;
  }
  throw DomainError("unknown dataflow '" + s + "'");
}

inline LoopOrder default_order(Kind k) {
  if (k == Kind::OS || k == Kind::IS) return LoopOrder::parse("b-u-h-w-c-i-j");
  return LoopOrder();
}

struct DataflowKind {
  Kind kind = Kind::RS;
  LoopOrder order;
  std::int64_t engine_groups = 3;  // RS: adjacent outputs of one ofmap row sharing weights

  static DataflowKind make(Kind k) { return DataflowKind{k, default_order(k), 3}; }
};

struct AccessStats {
  std::int64_t ifmap_fetches = 0;
  std::int64_t weight_fetches = 0;
  std::int64_t psum_writes = 0;
  std::int64_t batches_consumed = 0;
  std::int64_t cycles_per_output = 0;

  std::int64_t transactions() const { return ifmap_fetches + weight_fetches + psum_writes; }

  friend bool operator==(const AccessStats&, const AccessStats&) = default;
};

struct Tuple {
  std::int64_t b = 0, u = 0, c = 0, h = 0, w = 0, i = 0, j = 0;
  friend auto operator<=>(const Tuple&, const Tuple&) = default;
};

inline std::array<std::int64_t, 7> loop_extents(const LayerShape& s) {
  return {s.N, s.M, s.C, s.E(), s.E(), s.R, s.R};
}

/// Calls f(tuple) for every iteration of the nest, outermost loop first in `order`.
template <class F>
void for_each_tuple(const LayerShape& shape, const LoopOrder& order, F&& f) {
  shape.validate();
  const auto ext = loop_extents(shape);
  std::array<std::int64_t, 7> idx{};  // indexed by Loop
  const auto& loops = order.loops();
  while (true) {
    f(Tuple{idx[0], idx[1], idx[2], idx[3], idx[4], idx[5], idx[6]});
    int level = 6;
    for (; level >= 0; --level) {
      const auto l = static_cast<std::size_t>(loops[level]);
      if (++idx[l] < ext[l]) break;
      idx[l] = 0;
    }
    if (level < 0) return;
  }
}

inline std::vector<Tuple> enumerate_schedule(const LayerShape& shape, const LoopOrder& order) {
  std::vector<Tuple> out;
  out.reserve(static_cast<std::size_t>(shape.macs()));
  for_each_tuple(shape, order, [&](const Tuple& t) { out.push_back(t); });
  return out;
}

inline std::int64_t batches_per_output(const LayerShape& s) { return cost::ceil_div(s.window(), 9); }

/// Distinct ifmap rows (or columns) touched by the sliding window.
inline std::int64_t touched_extent(const LayerShape& s) { return s.S <= s.R ? s.H : s.E() * s.R; }

inline AccessStats access_counts(const LayerShape& shape, const DataflowKind& flow) {
  shape.validate();
  const std::int64_t macs = shape.macs();
  const std::int64_t outputs = shape.outputs();
  const std::int64_t per_output = batches_per_output(shape);
  AccessStats st;
  st.batches_consumed = outputs * per_output;
  st.psum_writes = outputs;
  st.cycles_per_output = per_output + 1;
  switch (flow.kind) {
    case Kind::NLR:
      st.ifmap_fetches = macs;
      st.weight_fetches = macs;
      st.psum_writes = outputs * per_output;
      st.cycles_per_output = 2 * per_output;
      break;
    case Kind::WS:
      st.ifmap_fetches = macs;
      st.weight_fetches = shape.M * shape.C * shape.R * shape.R;
      break;
    case Kind::IS: {
      const std::int64_t t = touched_extent(shape);
      st.ifmap_fetches = shape.N * shape.C * t * t;
      st.weight_fetches = macs;
      break;
    }
    case Kind::OS:
      st.ifmap_fetches = macs;
      st.weight_fetches = macs;
      break;
    case Kind::RS: {
      if (flow.engine_groups < 1) throw DomainError("RS needs at least one engine group");
      const std::int64_t g = flow.engine_groups;
      const std::int64_t e = shape.E();
      const std::int64_t rows = shape.N * shape.M * e;  // ofmap rows
      auto group_ifmap = [&](std::int64_t size) {
        const std::int64_t per_channel =
            shape.S < shape.R ? shape.R * (shape.R + (size - 1) * shape.S) : size * shape.R * shape.R;
        return shape.C * per_channel;
      };
      const std::int64_t full = e / g;
      const std::int64_t rest = e % g;
      const std::int64_t groups_per_row = full + (rest ? 1 : 0);
      st.weight_fetches = rows * groups_per_row * shape.C * shape.R * shape.R;
      st.ifmap_fetches = rows * (full * group_ifmap(g) + (rest ? group_ifmap(rest) : 0));
      break;
    }
  }
  return st;
}

/// Bits needed to hold v as a two's-complement (signed) or plain binary (unsigned) operand.
inline int required_bits(std::int64_t v, bool signed_mode) {
  if (!signed_mode) {
    if (v < 0) throw DomainError("negative operand in unsigned mode");
    return std::max(1, static_cast<int>(std::bit_width(static_cast<std::uint64_t>(v))));
  }
  const auto mag = static_cast<std::uint64_t>(v < 0 ? -(v + 1) : v);
  return static_cast<int>(std::bit_width(mag)) + 1;
}

inline int required_bits(std::span<const std::int64_t> values, bool signed_mode) {
  int bits = 1;
  for (auto v : values) bits = std::max(bits, required_bits(v, signed_mode));
  return bits;
}

/// Throws SizingError when the tensor contents could overflow the accumulator.
inline void check_layer_sizing(const LayerShape& shape, const engine::EngineConfig& config, const Tensor4& ifmap,
                               const Tensor4& filters) {
  cost::SizingRule rule;
  rule.reg_size = static_cast<int>(config.accumulator_width);
  rule.n_ch = shape.C;
  rule.window = shape.R * shape.R;
  rule.w_weight = required_bits(filters.data(), config.signed_mode);
  rule.w_data = required_bits(ifmap.data(), config.signed_mode);
  rule.input_register_width = static_cast<int>(config.operand_width);
  const auto verdict = cost::check_bitwidths(rule);
  if (!verdict.ok) throw SizingError(verdict.details);
}

struct EngineRun {
  Tensor4 ofmap;
  AccessStats stats;
};

/// Executes the layer on one engine per output neuron, feeding pairs in the flow's loop
/// order. Each engine buffers pairs into 9-pair batches, zero-pads the last one and
/// finalizes; NLR finalizes after every batch and reloads the result as bias.
inline EngineRun run_conv_with_engines(const LayerShape& shape, const DataflowKind& flow,
                                       const engine::EngineConfig& config, const Tensor4& ifmap,
                                       const Tensor4& filters, std::span<const std::int64_t> bias) {
  shape.validate();
  const auto N = static_cast<std::size_t>(shape.N);
  const auto M = static_cast<std::size_t>(shape.M);
  const auto C = static_cast<std::size_t>(shape.C);
  const auto H = static_cast<std::size_t>(shape.H);
  const auto R = static_cast<std::size_t>(shape.R);
  const auto E = static_cast<std::size_t>(shape.E());
  if (ifmap.dims() != std::array<std::size_t, 4>{N, C, H, H}) throw ShapeError("ifmap dims do not match N x C x H x H");
  if (filters.dims() != std::array<std::size_t, 4>{M, C, R, R}) throw ShapeError("filter dims do not match M x C x R x R");
  if (bias.size() != M) throw ShapeError("bias length does not match M");
  check_layer_sizing(shape, config, ifmap, filters);

  const engine::Engine eng(config);
  const bool nlr = flow.kind == Kind::NLR;
  struct Slot {
    engine::EngineState state;
    ppgen::Batch buffer{};
    std::size_t fill = 0;
  };
  const std::size_t outputs = N * M * E * E;
  std::vector<Slot> slots(outputs);
  for (std::size_t z = 0; z < N; ++z) {
    for (std::size_t u = 0; u < M; ++u) {
      for (std::size_t k = 0; k < E * E; ++k) slots[(z * M + u) * E * E + k].state = eng.reset(bias[u]);
    }
  }

  std::int64_t batches = 0;
  std::int64_t finalizations = 0;
  auto drain = [&](Slot& slot) {
    slot.state = eng.consume_batch(slot.state, slot.buffer);
    ++batches;
    slot.buffer = ppgen::Batch{};
    slot.fill = 0;
    if (nlr) {
      const auto r = eng.finalize(slot.state);
      ++finalizations;
      slot.state = eng.reset(r.sum);
    }
  };

  const auto S = static_cast<std::size_t>(shape.S);
  for_each_tuple(shape, flow.order, [&](const Tuple& t) {
    const auto z = static_cast<std::size_t>(t.b);
    const auto u = static_cast<std::size_t>(t.u);
    const auto c = static_cast<std::size_t>(t.c);
    const auto x = static_cast<std::size_t>(t.h);
    const auto y = static_cast<std::size_t>(t.w);
    const auto i = static_cast<std::size_t>(t.i);
    const auto j = static_cast<std::size_t>(t.j);
    Slot& slot = slots[((z * M + u) * E + x) * E + y];
    slot.buffer[slot.fill++] = {filters(u, c, i, j), ifmap(z, c, S * x + i, S * y + j)};
    if (slot.fill == ppgen::kBatchSize) drain(slot);
  });

  EngineRun run;
  run.ofmap = Tensor4(N, M, E, E);
  auto out = run.ofmap.data();
  for (std::size_t k = 0; k < outputs; ++k) {
    Slot& slot = slots[k];
    if (slot.fill > 0) drain(slot);
    if (nlr) {
      out[k] = eng.partial_value(slot.state);
    } else {
      out[k] = eng.finalize(slot.state).sum;
      ++finalizations;
    }
  }

  run.stats = access_counts(shape, flow);
  run.stats.batches_consumed = batches;
  run.stats.psum_writes = finalizations;
  return run;
}

/// Pads every ifmap plane with `pad` zeros on each side.
inline Tensor4 zero_pad(const Tensor4& ifmap, std::size_t pad) {
  const auto d = ifmap.dims();
  Tensor4 out(d[0], d[1], d[2] + 2 * pad, d[3] + 2 * pad);
  for (std::size_t a = 0; a < d[0]; ++a) {
    for (std::size_t b = 0; b < d[1]; ++b) {
      for (std::size_t y = 0; y < d[2]; ++y) {
        for (std::size_t x = 0; x < d[3]; ++x) out(a, b, y + pad, x + pad) = ifmap(a, b, y, x);
      }
    }
  }
  return out;
}

}  // namespace nesta::dataflow
