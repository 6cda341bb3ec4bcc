// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_RNG_HPP
#define SIEVE_RNG_HPP

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace sieve {

// Counter-based generator (Philox4x32-10). Every consumer of randomness takes
// an explicit Rng so runs are bit-reproducible given (seed, config), and
// independent substreams can be split off deterministically for parallel
// trials, epochs, and oracle batches.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t k = mix64(seed + 0x9E3779B97F4A7C15ULL);
    std::uint64_t s = mix64(stream + 0xBF58476D1CE4E5B9ULL + k);
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);
    ctr_hi_ = s;
    ctr_lo_ = 0;
    pos_ = 4;
  }

  // Deterministic independent substream (does not advance this stream).
  Rng substream(std::uint64_t id) const {
    Rng r(*this);
    r.ctr_hi_ = mix64(ctr_hi_ ^ mix64(id + 0x94D049BB133111EBULL));
    r.ctr_lo_ = 0;
    r.pos_ = 4;
    return r;
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection from the top to avoid modulo bias.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Ziggurat (128 layers); ~1 u32 per draw on the fast path. The sample
  // oracles draw billions of normals, so this path is hot.
  double normal() {
    const Zig& z = zig();
    for (;;) {
      auto hz = static_cast<std::int32_t>(next_u32());
      std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
      std::uint32_t mag = hz < 0
                              ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(hz))
                              : static_cast<std::uint32_t>(hz);
      if (mag < z.kn[iz]) return hz * z.wn[iz];
      if (iz == 0) {
        // tail beyond r
        double x, y;
        do {
          x = -std::log(1.0 - uniform()) / kZigR;
          y = -std::log(1.0 - uniform());
        } while (y + y < x * x);
        return hz > 0 ? kZigR + x : -(kZigR + x);
      }
      double x = hz * z.wn[iz];
      if (z.fn[iz] + uniform() * (z.fn[iz - 1] - z.fn[iz]) <
          std::exp(-0.5 * x * x))
        return x;
    }
  }

  void normal_fill(Eigen::Ref<Eigen::VectorXd> x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal();
  }

 private:
  static constexpr double kZigR = 3.442619855899;

  struct Zig {
    std::uint32_t kn[128];
    double wn[128];
    double fn[128];
  };

  static const Zig& zig() {
    static const Zig z = [] {
      Zig t;
      const double m1 = 2147483648.0;
      const double vn = 9.91256303526217e-3;
      double dn = kZigR, tn = kZigR;
      double q = vn / std::exp(-0.5 * dn * dn);
      t.kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
      t.kn[1] = 0;
      t.wn[0] = q / m1;
      t.wn[127] = dn / m1;
      t.fn[0] = 1.0;
      t.fn[127] = std::exp(-0.5 * dn * dn);
      for (int i = 126; i >= 1; --i) {
        dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
        t.kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
        tn = dn;
        t.fn[i] = std::exp(-0.5 * dn * dn);
        t.wn[i] = dn / m1;
      }
      return t;
    }();
    return z;
  }

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo_);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi_);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi_ >> 32);
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    block_[0] = c0;
    block_[1] = c1;
    block_[2] = c2;
    block_[3] = c3;
    ++ctr_lo_;
    pos_ = 0;
  }

  std::uint32_t key_[2];
  std::uint64_t ctr_lo_, ctr_hi_;
  std::uint32_t block_[4];
  int pos_;
};

}  // namespace sieve

#endif  // SIEVE_RNG_HPP
