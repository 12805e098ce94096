#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sas {

// Philox4x32-10 counter-based block cipher. Any sample of any stream is
// addressable in O(1), which is what makes batch runs order-independent and
// coupled-path experiments replayable.
struct Philox4x32 {
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = uint64_t(kMul0) * ctr[0];
      const uint64_t p1 = uint64_t(kMul1) * ctr[2];
      ctr = {uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], uint32_t(p1),
             uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], uint32_t(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// Reserved stream purposes; streams with different purposes never overlap.
enum class RngPurpose : uint32_t {
  InitState = 0,      // x_{t_0} standard normals
  IterationXi = 1,    // per-iteration xi, index = iteration*dim + component
  PathIncrement = 2,  // Brownian fine-grid increments
  DirectSample = 3,   // draws straight from an analytic distribution
  Generic = 4,
};

inline double uniform_open_closed(uint64_t u) {
  // (0, 1]; never 0 so log() is safe
  return double((u >> 11) + 1) * 0x1.0p-53;
}

inline double uniform_closed_open(uint64_t u) {
  // [0, 1)
  return double(u >> 11) * 0x1.0p-53;
}

// index-addressable N(0,1): pairs come from one Philox block via Box-Muller.
// The pair index may exceed 32 bits (dyadic path trees); its high bits share
// the counter word with the purpose tag.
inline double normal_at(uint64_t seed, uint64_t stream, RngPurpose purpose, uint64_t index) {
  const uint64_t pair = index >> 1;
  const std::array<uint32_t, 4> ctr = {uint32_t(pair),
                                       uint32_t(purpose) | (uint32_t(pair >> 32) << 8),
                                       uint32_t(stream), uint32_t(stream >> 32)};
  const std::array<uint32_t, 2> key = {uint32_t(seed), uint32_t(seed >> 32)};
  const auto r = Philox4x32::block(ctr, key);
  const uint64_t a = (uint64_t(r[0]) << 32) | r[1];
  const uint64_t b = (uint64_t(r[2]) << 32) | r[3];
  const double mag = std::sqrt(-2.0 * std::log(uniform_open_closed(a)));
  const double ang = 2.0 * M_PI * uniform_closed_open(b);
  return (index & 1) ? mag * std::sin(ang) : mag * std::cos(ang);
}

inline uint64_t uniform_bits_at(uint64_t seed, uint64_t stream, RngPurpose purpose, uint64_t index) {
  const std::array<uint32_t, 4> ctr = {uint32_t(index),
                                       uint32_t(purpose) | (uint32_t(index >> 32) << 8) |
                                           0x80000000u,
                                       uint32_t(stream), uint32_t(stream >> 32)};
  const std::array<uint32_t, 2> key = {uint32_t(seed), uint32_t(seed >> 32)};
  const auto r = Philox4x32::block(ctr, key);
  return (uint64_t(r[0]) << 32) | r[1];
}

inline double uniform_at(uint64_t seed, uint64_t stream, RngPurpose purpose, uint64_t index) {
  return uniform_closed_open(uniform_bits_at(seed, stream, purpose, index));
}

}  // namespace sas
