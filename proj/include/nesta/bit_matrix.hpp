#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nesta/errors.hpp"

namespace nesta {

using Bit = std::uint8_t;
using BitStack = std::vector<Bit>;

/// Bits grouped by significance: column i holds bits of weight 2^i, stacked in slot order.
/// The integer value of the matrix is sum_i 2^i * popcount(column i).
class BitMatrix {
 public:
  BitMatrix() = default;

  explicit BitMatrix(std::size_t width) : columns_(width) {}

  explicit BitMatrix(std::vector<BitStack> columns) : columns_(std::move(columns)) {
    for (const auto& col : columns_) {
      for (Bit b : col) {
        if (b > 1) throw DomainError("bit matrix elements must be 0 or 1");
      }
    }
  }

  /// Stacks each row value bit-by-bit: bit k of every row lands in column k (k < width).
  static BitMatrix from_rows(std::span<const std::uint64_t> rows, std::size_t width) {
    BitMatrix m(width);
    for (std::uint64_t r : rows) {
      for (std::size_t k = 0; k < width; ++k) m.columns_[k].push_back(static_cast<Bit>((r >> k) & 1U));
    }
    return m;
  }

  std::size_t width() const noexcept { return columns_.size(); }
  const BitStack& column(std::size_t i) const { return columns_.at(i); }
  const std::vector<BitStack>& columns() const noexcept { return columns_; }

  /// Appends a bit to column `col`, widening the matrix if needed.
  void push(std::size_t col, Bit b) {
    if (b > 1) throw DomainError("bit matrix elements must be 0 or 1");
    if (col >= columns_.size()) columns_.resize(col + 1);
    columns_[col].push_back(b);
  }

  void resize(std::size_t width) { columns_.resize(width); }

  std::vector<std::size_t> heights() const {
    std::vector<std::size_t> h(columns_.size());
    std::transform(columns_.begin(), columns_.end(), h.begin(), [](const BitStack& c) { return c.size(); });
    return h;
  }

  std::size_t max_height() const noexcept {
    std::size_t h = 0;
    for (const auto& c : columns_) h = std::max(h, c.size());
    return h;
  }

  std::size_t ones(std::size_t col) const {
    const auto& c = columns_.at(col);
    return static_cast<std::size_t>(std::count(c.begin(), c.end(), Bit{1}));
  }

  /// Weighted bit-sum. Throws if the result could exceed 63 bits.
  std::int64_t value() const {
    if (columns_.size() > 48) throw DomainError("bit matrix too wide for a 64-bit value");
    std::int64_t v = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) v += static_cast<std::int64_t>(ones(i)) << i;
    return v;
  }

  /// Weighted bit-sum modulo 2^bits; columns at or above `bits` vanish.
  std::uint64_t value_mod(unsigned bits) const {
    const std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < columns_.size() && i < bits; ++i) v += static_cast<std::uint64_t>(ones(i)) << i;
    return v & mask;
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::vector<BitStack> columns_;
};

/// MSB-first text rendering of an LSB-first bit row, e.g. {1,1,0} -> "011".
inline std::string to_msb_string(std::span<const Bit> lsb_first) {
  std::string s;
  s.reserve(lsb_first.size());
  for (auto it = lsb_first.rbegin(); it != lsb_first.rend(); ++it) s.push_back(*it ? '1' : '0');
  return s;
}

}  // namespace nesta
