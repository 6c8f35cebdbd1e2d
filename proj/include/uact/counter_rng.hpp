#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
//
// Every value is a pure function of (seed, stream, counter): no generator
// state is carried between draws, so a draw computed on any worker, in any
// order, is bitwise identical to the serial result.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace uact {

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace detail

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    detail::mulhilo(detail::kPhiloxM0, ctr[0], hi0, lo0);
    detail::mulhilo(detail::kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return ctr;
}

// 53 random bits -> double in [0, 1).
constexpr double bits_to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

// Stateless view over the Philox stream identified by (seed, stream).
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint32_t stream = 0) : seed_(seed), stream_(stream) {}

  constexpr PhiloxCounter block(std::uint64_t index, std::uint32_t lane = 0) const {
    const PhiloxCounter ctr = {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                               stream_, lane};
    const PhiloxKey key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    return philox4x32_10(ctr, key);
  }

  // Uniform in [0, 1).
  constexpr double uniform(std::uint64_t index, std::uint32_t lane = 0) const {
    const auto b = block(index, lane);
    return bits_to_unit(b[0], b[1]);
  }

  // Uniform integer in [0, n) by multiply-shift on 64 bits; bias is below 2^-32 for n < 2^32.
  constexpr std::uint64_t below(std::uint64_t n, std::uint64_t index, std::uint32_t lane = 0) const {
    const auto b = block(index, lane);
    const std::uint64_t bits = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * n) >> 64);
  }

  // Standard normal via Box-Muller on one Philox block.
  double normal(std::uint64_t index, std::uint32_t lane = 0) const {
    const auto b = block(index, lane);
    const double u1 = 1.0 - bits_to_unit(b[0], b[1]);  // (0, 1]
    const double u2 = bits_to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t seed() const { return seed_; }
  constexpr std::uint32_t stream() const { return stream_; }

  // Derive an independent stream, e.g. one per training step.
  constexpr CounterRng substream(std::uint32_t s) const { return CounterRng(seed_, stream_ * 0x9E3779B1u + s + 1); }

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
};

}  // namespace uact
