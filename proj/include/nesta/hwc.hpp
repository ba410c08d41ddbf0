#pragma once

// Hamming-weight compressors and compression-and-expansion layer (CEL) networks.
//
// A compressor C(m:n) replaces m bits of one significance by the n-bit binary count of its
// ones, spreading those n bits over n consecutive columns of the next layer. Layers are
// stacked until every column holds at most two bits, at which point a single two-operand
// addition (or just its generate stage) finishes the sum.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nesta/bit_matrix.hpp"
#include "nesta/errors.hpp"

namespace nesta::hwc {

enum class Variant { standard, star };

inline const char* to_string(Variant v) { return v == Variant::standard ? "standard" : "star"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "star") return Variant::star;
  throw DomainError("unknown CEL variant '" + s + "'");
}

inline constexpr std::size_t kDefaultMaxFeedbackSlots = 2;
inline constexpr std::size_t kMaxLayers = 64;

/// n = floor(log2 m) + 1.
inline std::size_t output_width(std::size_t m) {
  if (m == 0) throw DomainError("compressor needs at least one input bit");
  return static_cast<std::size_t>(std::bit_width(m));
}

/// True iff m = 2^n - 1, i.e. every output code is reachable.
inline bool is_complete(std::size_t m) {
  if (m == 0) throw DomainError("compressor needs at least one input bit");
  return (m & (m + 1)) == 0;
}

/// Popcount of the stack as output_width(size) bits, LSB first.
inline BitStack compress_column(std::span<const Bit> bits) {
  if (bits.empty()) throw DomainError("cannot compress an empty column");
  std::size_t ones = 0;
  for (Bit b : bits) {
    if (b > 1) throw DomainError("bit stack elements must be 0 or 1");
    ones += b;
  }
  const std::size_t n = output_width(bits.size());
  BitStack out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<Bit>((ones >> k) & 1U);
  return out;
}

/// One input of a compressor: slot `slot` of column `column` in the layer's input stacks.
struct BitRef {
  std::size_t column = 0;
  std::size_t slot = 0;
  friend bool operator==(const BitRef&, const BitRef&) = default;
};

struct Compressor {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t layer = 0;
  std::size_t column = 0;
  // A slot may appear twice: a bit of weight 2^(c+1) wired as two inputs of a column-c compressor.
  std::vector<BitRef> inputs;

  bool complete() const { return is_complete(m); }
  std::size_t spare() const { return ((std::size_t{1} << n) - 1) - m; }
};

using Layer = std::vector<Compressor>;

class CelNetwork {
 public:
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const std::vector<std::size_t>& input_heights() const noexcept { return input_heights_; }
  const std::vector<std::size_t>& feedback_slots() const noexcept { return feedback_slots_; }
  Variant variant() const noexcept { return variant_; }
  /// Columns at or above this index are discarded (modular arithmetic); 0 means unbounded.
  std::size_t width_limit() const noexcept { return width_limit_; }
  std::size_t input_width() const noexcept { return input_heights_.size(); }

  /// Bits each column accepts: data inputs plus reserved feedback slots.
  std::vector<std::size_t> capacity() const {
    std::vector<std::size_t> cap(input_heights_.size());
    for (std::size_t c = 0; c < cap.size(); ++c) cap[c] = input_heights_[c] + feedback_slots_[c];
    return cap;
  }

  /// Column heights entering layer k; the last entry holds the final (<= 2) heights.
  const std::vector<std::vector<std::size_t>>& stage_heights() const noexcept { return stage_heights_; }

  std::size_t compressor_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.size();
    return n;
  }

 private:
  friend CelNetwork build_cel_network(std::span<const std::size_t>, Variant, std::span<const std::size_t>,
                                      std::size_t, std::size_t);

  std::vector<Layer> layers_;
  std::vector<std::size_t> input_heights_;
  std::vector<std::size_t> feedback_slots_;
  std::vector<std::vector<std::size_t>> stage_heights_;
  Variant variant_ = Variant::standard;
  std::size_t width_limit_ = 0;
};

namespace detail {

inline std::size_t next_width(std::size_t in_width, const Layer& layer, std::size_t limit) {
  std::size_t w = in_width;
  for (const auto& comp : layer) w = std::max(w, comp.column + comp.n);
  return limit != 0 ? std::min(w, limit) : w;
}

inline std::vector<std::vector<bool>> consumed_slots(const std::vector<std::size_t>& heights, const Layer& layer) {
  std::vector<std::vector<bool>> used(heights.size());
  for (std::size_t c = 0; c < heights.size(); ++c) used[c].assign(heights[c], false);
  for (const auto& comp : layer) {
    for (const auto& ref : comp.inputs) used[ref.column][ref.slot] = true;
  }
  return used;
}

// Next-layer stacks are ordered: unconsumed bits of the column (in slot order), then
// compressor outputs in layer order. route_heights and eval_layer both follow it.
inline std::vector<std::size_t> route_heights(const std::vector<std::size_t>& in, const Layer& layer,
                                              std::size_t limit) {
  const auto used = consumed_slots(in, layer);
  std::vector<std::size_t> next(next_width(in.size(), layer, limit), 0);
  for (std::size_t c = 0; c < in.size() && c < next.size(); ++c) {
    next[c] = static_cast<std::size_t>(std::count(used[c].begin(), used[c].end(), false));
  }
  for (const auto& comp : layer) {
    for (std::size_t k = 0; k < comp.n; ++k) {
      const std::size_t col = comp.column + k;
      if (col < next.size()) ++next[col];
    }
  }
  return next;
}

inline std::vector<BitStack> eval_layer(const std::vector<BitStack>& in, const Layer& layer, std::size_t limit) {
  std::vector<std::size_t> heights(in.size());
  for (std::size_t c = 0; c < in.size(); ++c) heights[c] = in[c].size();
  const auto used = consumed_slots(heights, layer);
  std::vector<BitStack> next(next_width(in.size(), layer, limit));
  for (std::size_t c = 0; c < in.size() && c < next.size(); ++c) {
    for (std::size_t s = 0; s < in[c].size(); ++s) {
      if (!used[c][s]) next[c].push_back(in[c][s]);
    }
  }
  for (const auto& comp : layer) {
    std::size_t ones = 0;
    for (const auto& ref : comp.inputs) ones += in[ref.column][ref.slot];
    for (std::size_t k = 0; k < comp.n; ++k) {
      const std::size_t col = comp.column + k;
      if (col < next.size()) next[col].push_back(static_cast<Bit>((ones >> k) & 1U));
    }
  }
  return next;
}

inline Compressor make_compressor(std::size_t layer, std::size_t column, std::size_t first_slot, std::size_t m) {
  Compressor comp;
  comp.layer = layer;
  comp.column = column;
  comp.inputs.reserve(m);
  for (std::size_t s = 0; s < m; ++s) comp.inputs.push_back({column, first_slot + s});
  comp.m = m;
  comp.n = output_width(m);
  return comp;
}

inline void refresh_size(Compressor& comp) {
  comp.m = comp.inputs.size();
  comp.n = output_width(comp.m);
}

// Largest 2^k - 1 not exceeding h (h >= 1).
inline std::size_t largest_complete(std::size_t h) { return (std::size_t{1} << (std::bit_width(h + 1) - 1)) - 1; }

// Among the column's first-layer compressors, the one with the most spare capacity.
inline Compressor* roomiest(Layer& layer, std::size_t column) {
  Compressor* best = nullptr;
  for (auto& comp : layer) {
    if (comp.column == column && (best == nullptr || comp.spare() > best->spare())) best = &comp;
  }
  return best;
}

}  // namespace detail

/// Plans a CEL network for the given per-column data heights.
///
/// CEL-1 is planned on the data bits alone. Standard networks use one compressor per
/// column over the whole stack; star networks use only complete compressors and defer
/// leftovers (at most 2 bits) to the next layer. Feedback slots of a standard network go
/// into the roomiest CEL-1 compressor of their column (widening it when none has room);
/// a column without a compressor wires the bit twice into column c-1. Star networks defer
/// feedback to CEL-2 so that CEL-1 stays complete. Later layers compress every column
/// taller than two bits with a single compressor.
inline CelNetwork build_cel_network(std::span<const std::size_t> input_heights, Variant variant,
                                    std::span<const std::size_t> feedback_slots = {},
                                    std::size_t width_limit = 0,
                                    std::size_t max_feedback = kDefaultMaxFeedbackSlots) {
  const std::size_t width = std::max(input_heights.size(), feedback_slots.size());
  if (width_limit != 0 && width > width_limit) {
    throw DomainError("network input is wider than its width limit");
  }
  std::vector<std::size_t> base(width, 0);
  std::vector<std::size_t> fb(width, 0);
  std::copy(input_heights.begin(), input_heights.end(), base.begin());
  std::copy(feedback_slots.begin(), feedback_slots.end(), fb.begin());

  bool any = false;
  for (std::size_t c = 0; c < width; ++c) {
    if (fb[c] > max_feedback) {
      throw DomainError("column " + std::to_string(c) + " reserves " + std::to_string(fb[c]) +
                        " feedback slots, maximum is " + std::to_string(max_feedback));
    }
    any = any || base[c] + fb[c] > 0;
  }
  if (!any) throw DomainError("network has no input bits");

  CelNetwork net;
  net.input_heights_ = base;
  net.feedback_slots_ = fb;
  net.variant_ = variant;
  net.width_limit_ = width_limit;

  std::vector<std::size_t> current = net.capacity();
  net.stage_heights_.push_back(current);

  Layer first;
  for (std::size_t c = 0; c < width; ++c) {
    if (base[c] <= 2) continue;
    if (variant == Variant::standard) {
      first.push_back(detail::make_compressor(0, c, 0, base[c]));
    } else {
      std::size_t slot = 0;
      std::size_t remaining = base[c];
      while (remaining >= 3) {
        const std::size_t m = detail::largest_complete(remaining);
        first.push_back(detail::make_compressor(0, c, slot, m));
        slot += m;
        remaining -= m;
      }
    }
  }
  if (variant == Variant::standard) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t s = base[c]; s < base[c] + fb[c]; ++s) {
        if (Compressor* comp = detail::roomiest(first, c)) {
          comp->inputs.push_back({c, s});
          detail::refresh_size(*comp);
        } else if (c > 0 && (comp = detail::roomiest(first, c - 1)) != nullptr) {
          comp->inputs.push_back({c, s});
          comp->inputs.push_back({c, s});
          detail::refresh_size(*comp);
        }
      }
    }
  }
  if (!first.empty()) {
    current = detail::route_heights(current, first, width_limit);
    net.layers_.push_back(std::move(first));
    net.stage_heights_.push_back(current);
  }

  while (std::any_of(current.begin(), current.end(), [](std::size_t h) { return h > 2; })) {
    if (net.layers_.size() >= kMaxLayers) throw std::logic_error("CEL planning did not converge");
    Layer layer;
    const std::size_t index = net.layers_.size();
    for (std::size_t c = 0; c < current.size(); ++c) {
      if (current[c] > 2) layer.push_back(detail::make_compressor(index, c, 0, current[c]));
    }
    current = detail::route_heights(current, layer, width_limit);
    net.layers_.push_back(std::move(layer));
    net.stage_heights_.push_back(current);
  }
  return net;
}

namespace detail {

inline std::vector<BitStack> admit_input(const CelNetwork& net, const BitMatrix& input) {
  const auto cap = net.capacity();
  std::vector<BitStack> stacks(cap.size());
  for (std::size_t c = 0; c < input.width(); ++c) {
    const std::size_t h = input.column(c).size();
    const std::size_t allowed = c < cap.size() ? cap[c] : 0;
    if (h > allowed) throw CapacityError(c, h, allowed);
    if (c < stacks.size()) stacks[c] = input.column(c);
  }
  for (std::size_t c = 0; c < stacks.size(); ++c) stacks[c].resize(cap[c], 0);
  return stacks;
}

}  // namespace detail

/// Input (padded with zeros to capacity) followed by the matrix after each layer.
inline std::vector<BitMatrix> evaluate_trace(const CelNetwork& net, const BitMatrix& input) {
  std::vector<BitStack> stacks = detail::admit_input(net, input);
  std::vector<BitMatrix> trace;
  trace.reserve(net.layers().size() + 1);
  trace.emplace_back(stacks);
  for (const auto& layer : net.layers()) {
    stacks = detail::eval_layer(stacks, layer, net.width_limit());
    trace.emplace_back(stacks);
  }
  return trace;
}

/// Runs every layer; the result has at most two bits per column and the same value as the
/// input (modulo 2^width_limit when the network is width-limited).
inline BitMatrix evaluate_network(const CelNetwork& net, const BitMatrix& input) {
  std::vector<BitStack> stacks = detail::admit_input(net, input);
  for (const auto& layer : net.layers()) stacks = detail::eval_layer(stacks, layer, net.width_limit());
  return BitMatrix(std::move(stacks));
}

/// The same network flattened to wires for repeated evaluation. A bit that passes through a
/// layer keeps its wire, so evaluation only touches compressor inputs and outputs.
class CompiledNetwork {
 public:
  explicit CompiledNetwork(const CelNetwork& net) : capacity_(net.capacity()) {
    std::vector<std::vector<std::uint32_t>> cur(capacity_.size());
    for (std::size_t c = 0; c < cur.size(); ++c) {
      for (std::size_t s = 0; s < capacity_[c]; ++s) cur[c].push_back(wires_++);
    }
    for (const auto& layer : net.layers()) {
      std::vector<std::vector<bool>> used(cur.size());
      for (std::size_t c = 0; c < cur.size(); ++c) used[c].assign(cur[c].size(), false);
      std::size_t width = cur.size();
      std::vector<std::vector<std::uint32_t>> produced;
      for (const auto& comp : layer) {
        Op op{static_cast<std::uint32_t>(op_inputs_.size()), static_cast<std::uint32_t>(comp.inputs.size()), wires_,
              static_cast<std::uint32_t>(comp.n), comp.column};
        for (const auto& ref : comp.inputs) {
          op_inputs_.push_back(cur[ref.column][ref.slot]);
          used[ref.column][ref.slot] = true;
        }
        wires_ += op.n;
        ops_.push_back(op);
        width = std::max(width, comp.column + comp.n);
      }
      if (net.width_limit() != 0) width = std::min(width, net.width_limit());
      std::vector<std::vector<std::uint32_t>> next(width);
      for (std::size_t c = 0; c < cur.size() && c < width; ++c) {
        for (std::size_t s = 0; s < cur[c].size(); ++s) {
          if (!used[c][s]) next[c].push_back(cur[c][s]);
        }
      }
      for (std::size_t k = ops_.size() - layer.size(); k < ops_.size(); ++k) {
        for (std::uint32_t b = 0; b < ops_[k].n; ++b) {
          const std::size_t col = ops_[k].column + b;
          if (col < width) next[col].push_back(ops_[k].first_output + b);
        }
      }
      cur = std::move(next);
    }
    outputs_ = std::move(cur);
  }

  const std::vector<std::size_t>& capacity() const noexcept { return capacity_; }

  /// Same contract as evaluate_network.
  BitMatrix evaluate(const BitMatrix& input) const {
    const auto wires = run(input);
    std::vector<BitStack> out(outputs_.size());
    for (std::size_t c = 0; c < outputs_.size(); ++c) {
      for (auto w : outputs_[c]) out[c].push_back(wires[w]);
    }
    return BitMatrix(std::move(out));
  }

 private:
  struct Op {
    std::uint32_t first_input;
    std::uint32_t input_count;
    std::uint32_t first_output;
    std::uint32_t n;
    std::size_t column;
  };

  std::vector<Bit> run(const BitMatrix& input) const {
    std::vector<Bit> wires(wires_, 0);
    std::uint32_t base = 0;
    for (std::size_t c = 0; c < capacity_.size(); ++c) {
      if (c < input.width()) {
        const auto& col = input.column(c);
        if (col.size() > capacity_[c]) throw CapacityError(c, col.size(), capacity_[c]);
        std::copy(col.begin(), col.end(), wires.begin() + base);
      }
      base += static_cast<std::uint32_t>(capacity_[c]);
    }
    for (std::size_t c = capacity_.size(); c < input.width(); ++c) {
      if (!input.column(c).empty()) throw CapacityError(c, input.column(c).size(), 0);
    }
    for (const auto& op : ops_) {
      std::uint32_t ones = 0;
      for (std::uint32_t k = 0; k < op.input_count; ++k) ones += wires[op_inputs_[op.first_input + k]];
      for (std::uint32_t b = 0; b < op.n; ++b) wires[op.first_output + b] = static_cast<Bit>((ones >> b) & 1U);
    }
    return wires;
  }

  std::vector<std::size_t> capacity_;
  std::uint32_t wires_ = 0;
  std::vector<std::uint32_t> op_inputs_;
  std::vector<Op> ops_;
  std::vector<std::vector<std::uint32_t>> outputs_;
};

struct DepthReport {
  std::vector<std::size_t> per_layer;
  std::size_t total = 0;
};

/// Depth model: a C(m:n) costs n logic levels, a layer costs its deepest compressor.
inline DepthReport logic_levels(const CelNetwork& net) {
  DepthReport r;
  for (const auto& layer : net.layers()) {
    std::size_t d = 0;
    for (const auto& comp : layer) d = std::max(d, comp.n);
    r.per_layer.push_back(d);
    r.total += d;
  }
  return r;
}

/// Largest compressor input count in layer k.
inline std::size_t max_compressor_inputs(const CelNetwork& net, std::size_t k) {
  std::size_t m = 0;
  for (const auto& comp : net.layers().at(k)) m = std::max(m, comp.m);
  return m;
}

/// The multi-operand adder of `operands` unsigned values `bits` wide (e.g. 9 x 16).
inline CelNetwork multi_operand_adder(std::size_t operands, std::size_t bits, Variant variant) {
  const std::vector<std::size_t> heights(bits, operands);
  return build_cel_network(heights, variant);
}

}  // namespace nesta::hwc
