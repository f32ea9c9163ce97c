#pragma once

// Philox4x32-10 counter-based generator. A draw is a pure function of
// (seed, counter), so chains can address their variates by (step, edge) and
// replicas by index without sharing any generator state.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace dacq {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream tags keep independent uses of one seed apart.
enum class Stream : std::uint32_t {
  kBond = 1,
  kColor = 2,
  kSpin = 3,
  kBernoulli = 4,
  kCoupling = 5,
  kDerive = 6,
  kSampling = 7,
};

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint64_t seed() const { return (std::uint64_t{key_[1]} << 32) | key_[0]; }

  Philox4x32::Counter block(std::uint64_t c0, std::uint64_t c1) const {
    return Philox4x32::apply({static_cast<std::uint32_t>(c0), static_cast<std::uint32_t>(c0 >> 32),
                              static_cast<std::uint32_t>(c1), static_cast<std::uint32_t>(c1 >> 32)},
                             key_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform(std::uint64_t c0, std::uint64_t c1) const {
    auto b = block(c0, c1);
    const std::uint64_t bits = ((std::uint64_t{b[0]} << 32) | b[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  double uniform(Stream stream, std::uint64_t step, std::uint32_t index) const {
    return uniform(step, (std::uint64_t{static_cast<std::uint32_t>(stream)} << 32) | index);
  }

 private:
  Philox4x32::Key key_;
};

/// Seed for sub-task `index` (replica, component, ...) of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  CounterRng rng(master);
  auto b = rng.block(index, (std::uint64_t{static_cast<std::uint32_t>(Stream::kDerive)} << 32) ^ tag);
  return (std::uint64_t{b[2]} << 32) | b[3];
}

/// Sequential view of one counter stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, Stream stream, std::uint32_t substream = 0)
      : rng_(seed), tag_((std::uint64_t{static_cast<std::uint32_t>(stream)} << 32) | substream) {}

  double uniform() { return rng_.uniform(next_++, tag_); }
  std::uint64_t position() const { return next_; }

  /// Color in 1..s drawn from probabilities `a` by inversion.
  int categorical(std::span<const double> a) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      acc += a[i];
      if (u < acc) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(a.size());
  }

 private:
  CounterRng rng_;
  std::uint64_t tag_;
  std::uint64_t next_ = 0;
};

}  // namespace dacq
