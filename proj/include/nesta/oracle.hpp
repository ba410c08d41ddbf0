#pragma once

// Exact integer references: scalar MAC, nine-pair dot product and direct convolution.
// Slow on purpose; every equivalence check compares against these.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nesta/errors.hpp"
#include "nesta/ppgen.hpp"

namespace nesta::oracle {

/// N: batch, M: filters, C: channels per filter, H: (padded) ifmap size, R: kernel, S: stride.
struct LayerShape {
  std::int64_t N = 1;
  std::int64_t M = 1;
  std::int64_t C = 1;
  std::int64_t H = 1;
  std::int64_t R = 1;
  std::int64_t S = 1;

  std::int64_t E() const { return (H - R + S) / S; }

  void validate() const {
    if (N < 1 || M < 1 || C < 1 || H < 1 || R < 1 || S < 1) throw ShapeError("layer extents must be positive");
    if (R > H) throw ShapeError("kernel " + std::to_string(R) + " exceeds ifmap size " + std::to_string(H));
    if ((H - R) % S != 0) {
      throw ShapeError("(H - R) = " + std::to_string(H - R) + " is not divisible by stride " + std::to_string(S));
    }
  }

  static LayerShape make(std::int64_t n, std::int64_t m, std::int64_t c, std::int64_t h, std::int64_t r,
                         std::int64_t s = 1) {
    LayerShape shape{n, m, c, h, r, s};
    shape.validate();
    return shape;
  }

  std::int64_t outputs() const { return N * M * E() * E(); }
  std::int64_t window() const { return R * R * C; }
  std::int64_t macs() const { return outputs() * window(); }

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t d0, std::size_t d1, std::size_t d2, std::size_t d3, std::int64_t fill = 0)
      : dims_{d0, d1, d2, d3}, data_(d0 * d1 * d2 * d3, fill) {}
  Tensor4(std::array<std::size_t, 4> dims, std::vector<std::int64_t> data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != dims_[0] * dims_[1] * dims_[2] * dims_[3]) throw ShapeError("tensor data length mismatch");
  }

  const std::array<std::size_t, 4>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const std::int64_t> data() const noexcept { return data_; }
  std::span<std::int64_t> data() noexcept { return data_; }

  std::int64_t& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[index(a, b, c, d)];
  }
  std::int64_t operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[index(a, b, c, d)];
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t index(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return ((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d;
  }

  std::array<std::size_t, 4> dims_{0, 0, 0, 0};
  std::vector<std::int64_t> data_;
};

inline std::int64_t mac_reference(std::int64_t acc, std::int64_t w, std::int64_t i) { return acc + w * i; }

inline std::int64_t dot9(std::span<const ppgen::OperandPair> pairs) {
  if (pairs.size() != ppgen::kBatchSize) throw DomainError("dot9 needs exactly 9 pairs");
  std::int64_t acc = 0;
  for (const auto& p : pairs) acc = mac_reference(acc, p.w, p.i);
  return acc;
}

/// O[z][u][x][y] = B[u] + sum_k sum_i sum_j I[z][k][Sx+i][Sy+j] * W[u][k][i][j] (valid convolution).
inline Tensor4 conv_layer(const Tensor4& ifmap, const Tensor4& filters, std::span<const std::int64_t> bias,
                          const LayerShape& shape) {
  shape.validate();
  const auto N = static_cast<std::size_t>(shape.N);
  const auto M = static_cast<std::size_t>(shape.M);
  const auto C = static_cast<std::size_t>(shape.C);
  const auto H = static_cast<std::size_t>(shape.H);
  const auto R = static_cast<std::size_t>(shape.R);
  const auto S = static_cast<std::size_t>(shape.S);
  const auto E = static_cast<std::size_t>(shape.E());
  if (ifmap.dims() != std::array<std::size_t, 4>{N, C, H, H}) throw ShapeError("ifmap dims do not match N x C x H x H");
  if (filters.dims() != std::array<std::size_t, 4>{M, C, R, R}) throw ShapeError("filter dims do not match M x C x R x R");
  if (bias.size() != M) throw ShapeError("bias length does not match M");

  Tensor4 out(N, M, E, E);
  for (std::size_t z = 0; z < N; ++z) {
    for (std::size_t u = 0; u < M; ++u) {
      for (std::size_t x = 0; x < E; ++x) {
        for (std::size_t y = 0; y < E; ++y) {
          std::int64_t acc = bias[u];
          for (std::size_t k = 0; k < C; ++k) {
            for (std::size_t i = 0; i < R; ++i) {
              for (std::size_t j = 0; j < R; ++j) {
                acc = mac_reference(acc, filters(u, k, i, j), ifmap(z, k, S * x + i, S * y + j));
              }
            }
          }
          out(z, u, x, y) = acc;
        }
      }
    }
  }
  return out;
}

}  // namespace nesta::oracle
