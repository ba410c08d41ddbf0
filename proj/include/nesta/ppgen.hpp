#pragma once

// Partial-product generation (DRU) and sign handling (SEU).
//
// Each of the nine (weight, input) pairs becomes b shifted AND-rows of a nonnegative
// multiplicand. A negative multiplier contributes its low b-1 bits as ordinary rows and its
// sign bit as the correction -2^(b-1) * multiplicand, emitted as a two's-complement row
// modulo the accumulator width. The bit layout is fixed by (b, signed mode, accumulator
// width) alone, so one CEL network serves every batch.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nesta/bit_matrix.hpp"
#include "nesta/errors.hpp"

namespace nesta::ppgen {

inline constexpr std::size_t kBatchSize = 9;

struct OperandPair {
  std::int64_t w = 0;
  std::int64_t i = 0;
  friend bool operator==(const OperandPair&, const OperandPair&) = default;
};

using Batch = std::array<OperandPair, kBatchSize>;

inline std::int64_t operand_min(unsigned width, bool signed_mode) {
  return signed_mode ? -(std::int64_t{1} << (width - 1)) : 0;
}

inline std::int64_t operand_max(unsigned width, bool signed_mode) {
  return signed_mode ? (std::int64_t{1} << (width - 1)) - 1 : (std::int64_t{1} << width) - 1;
}

inline void check_operand(std::int64_t v, unsigned width, bool signed_mode) {
  if (v < operand_min(width, signed_mode) || v > operand_max(width, signed_mode)) {
    throw OverflowError("operand " + std::to_string(v) + " does not fit " + std::to_string(width) + "-bit " +
                        (signed_mode ? "signed" : "unsigned") + " range");
  }
}

struct NormalizedPair {
  std::int64_t multiplicand = 0;  // never negative
  std::int64_t multiplier = 0;
  bool swapped = false;           // weight moved to the multiplier position
};

/// By default the weight is the multiplicand. With mixed signs the negative operand becomes
/// the multiplier; with both negative both are negated.
inline NormalizedPair normalize_signs(const OperandPair& p) {
  const bool wn = p.w < 0;
  const bool in = p.i < 0;
  if (wn && in) return {-p.w, -p.i, false};
  if (wn) return {p.i, p.w, true};
  return {p.w, p.i, false};
}

struct PartialProductMatrix {
  BitMatrix matrix;                       // nonnegative AND-rows, columns 0 .. 2b-2
  std::vector<std::int64_t> corrections;  // -2^(b-1) * multiplicand per pair (signed mode only)
  unsigned operand_width = 0;
  bool signed_mode = true;
};

/// Exactly nine pairs; pad short batches with (0, 0).
inline PartialProductMatrix generate_partial_products(std::span<const OperandPair> pairs, unsigned width,
                                                      bool signed_mode = true) {
  if (pairs.size() != kBatchSize) {
    throw DomainError("a batch holds exactly 9 operand pairs, got " + std::to_string(pairs.size()));
  }
  if (width < 2 || width > 24) throw DomainError("operand width must be in [2, 24]");

  PartialProductMatrix out;
  out.operand_width = width;
  out.signed_mode = signed_mode;
  out.matrix = BitMatrix(2 * width - 1);
  for (const auto& p : pairs) {
    check_operand(p.w, width, signed_mode);
    check_operand(p.i, width, signed_mode);

    std::int64_t multiplicand = p.w;
    std::int64_t multiplier = p.i;
    std::uint64_t multiplier_bits = static_cast<std::uint64_t>(p.i);
    std::size_t rows = width;
    if (signed_mode) {
      const auto n = normalize_signs(p);
      multiplicand = n.multiplicand;
      multiplier = n.multiplier;
      // Low b-1 bits of a negative multiplier are its two's-complement bits; the sign bit
      // turns into the correction row below.
      multiplier_bits = static_cast<std::uint64_t>(multiplier) & ((std::uint64_t{1} << width) - 1);
      if (multiplier < 0) {
        rows = width - 1;
        out.corrections.push_back(-(std::int64_t{1} << (width - 1)) * multiplicand);
      } else {
        out.corrections.push_back(0);
      }
    }
    const auto a = static_cast<std::uint64_t>(multiplicand);
    for (std::size_t k = 0; k < width; ++k) {
      const std::uint64_t xk = k < rows ? (multiplier_bits >> k) & 1U : 0;
      for (std::size_t j = 0; j < width; ++j) {
        out.matrix.push(k + j, static_cast<Bit>(xk & (a >> j) & 1U));
      }
    }
  }
  return out;
}

/// Folds the correction rows into the matrix as accumulator-width two's-complement rows
/// (the SE columns). Bits at or above `accumulator_width` are dropped.
inline BitMatrix sign_extension_bits(const PartialProductMatrix& pp, unsigned accumulator_width) {
  const unsigned b = pp.operand_width;
  if (accumulator_width < 2 * b || accumulator_width > 62) {
    throw DomainError("accumulator width " + std::to_string(accumulator_width) + " cannot hold " +
                      std::to_string(b) + "-bit products");
  }
  BitMatrix m = pp.matrix;
  m.resize(accumulator_width);
  const std::uint64_t mask = (std::uint64_t{1} << accumulator_width) - 1;
  for (std::int64_t corr : pp.corrections) {
    const std::uint64_t row = static_cast<std::uint64_t>(corr) & mask;
    for (unsigned c = b - 1; c < accumulator_width; ++c) m.push(c, static_cast<Bit>((row >> c) & 1U));
  }
  return m;
}

/// Per-column data heights produced by sign_extension_bits for any batch.
inline std::vector<std::size_t> layout_heights(unsigned width, bool signed_mode, unsigned accumulator_width) {
  std::vector<std::size_t> h(accumulator_width, 0);
  for (std::size_t k = 0; k < width; ++k) {
    for (std::size_t j = 0; j < width; ++j) h[k + j] += kBatchSize;
  }
  if (signed_mode) {
    for (unsigned c = width - 1; c < accumulator_width; ++c) h[c] += kBatchSize;
  }
  return h;
}

}  // namespace nesta::ppgen
