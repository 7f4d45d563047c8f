// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/noise.hpp"

#include <array>
#include <cmath>

namespace spherelab {
namespace {

constexpr int kLayers = 256;
constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

inline double to_unit(std::uint64_t z) {
  return static_cast<double>(z >> 11) * kInv53;  // [0, 1)
}

// Ziggurat tables for the standard normal (Marsaglia & Tsang layout with 256
// layers). xtab[0] is the pseudo-width of the base layer, xtab[1] the tail
// boundary r, xtab[256] = 0. ftab[i] = exp(-xtab[i]^2 / 2).
struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers + 1> f{};
  double r = 0.0;
  double inv_r = 0.0;

  ZigguratTables() {
    auto density = [](double t) { return std::exp(-0.5 * t * t); };
    auto tail_mass = [](double t) {
      return std::sqrt(M_PI / 2.0) * std::erfc(t / std::sqrt(2.0));
    };
    // Closure residual of the layer recursion for a trial tail boundary.
    // Positive means the layers are too fat (hit density 1 early).
    auto closure = [&](double rr, std::array<double, kLayers + 1>* out) {
      const double v = rr * density(rr) + tail_mass(rr);
      std::array<double, kLayers + 1>& xs = *out;
      xs[0] = v / density(rr);
      xs[1] = rr;
      for (int i = 1; i < kLayers; ++i) {
        const double arg = v / xs[i] + density(xs[i]);
        if (arg >= 1.0) {
          if (i == kLayers - 1) return arg - 1.0;
          return 1.0;  // overshoot before the last layer
        }
        xs[i + 1] = std::sqrt(-2.0 * std::log(arg));
      }
      return v / xs[kLayers - 1] + density(xs[kLayers - 1]) - 1.0;
    };

    double lo = 3.0, hi = 4.0;
    std::array<double, kLayers + 1> xs{};
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (closure(mid, &xs) > 0.0) {
        lo = mid;  // too fat -> raise the tail boundary
      } else {
        hi = mid;
      }
    }
    r = 0.5 * (lo + hi);
    closure(r, &xs);
    x = xs;
    x[kLayers] = 0.0;
    inv_r = 1.0 / r;
    for (int i = 0; i <= kLayers; ++i) f[i] = density(x[i]);
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

// Lazily pulls further 64-bit words for the rare ziggurat slow paths. The
// words come from dedicated counter space ((attempt+1)<<2 | lane, never 0),
// so they cannot collide with primary draws at any address.
class Well {
 public:
  Well(const Philox4x64::Key& key, std::uint64_t family, std::uint64_t step,
       std::uint64_t channel_block, std::uint64_t lane)
      : key_(key),
        counter_{family, step, channel_block, 0},
        lane_tag_(lane) {}

  std::uint64_t next() {
    if (pos_ == 4) {
      counter_[3] = ((attempt_++ + 1) << 2) | lane_tag_;
      buffer_ = Philox4x64::generate(counter_, key_);
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  double next_unit() { return to_unit(next()); }

 private:
  Philox4x64::Key key_;
  Philox4x64::Counter counter_;
  std::uint64_t lane_tag_;
  Philox4x64::Counter buffer_{};
  std::uint64_t attempt_ = 0;
  int pos_ = 4;
};

// Wedge and tail rejection paths (~1.7% of draws); kept out of line so the
// accept path stays branch-light.
[[gnu::noinline]] double ziggurat_slow(const ZigguratTables& t,
                                       std::uint64_t z, Well well) {
  for (;;) {
    const int i = static_cast<int>(z & 255);
    const double sign = (z & 256) ? -1.0 : 1.0;
    const double cand = to_unit(z) * t.x[i];
    if (cand < t.x[i + 1]) return sign * cand;
    if (i == 0) {
      // Tail beyond r: exponential rejection (exact).
      for (;;) {
        const double u1 = 1.0 - well.next_unit();  // (0, 1]
        const double u2 = 1.0 - well.next_unit();
        const double xt = -std::log(u1) * t.inv_r;
        const double yt = -std::log(u2);
        if (yt + yt >= xt * xt) return sign * (t.r + xt);
      }
    }
    const double y = t.f[i] + well.next_unit() * (t.f[i + 1] - t.f[i]);
    if (y < std::exp(-0.5 * cand * cand)) return sign * cand;
    z = well.next();  // resample the layer
  }
}

// Maps one 64-bit word to a standard normal deviate.
inline double ziggurat(const ZigguratTables& t, std::uint64_t z,
                       const Philox4x64::Key& key, std::uint64_t family,
                       std::uint64_t step, std::uint64_t channel_block,
                       std::uint64_t lane) {
  const int i = static_cast<int>(z & 255);
  const double cand = to_unit(z) * t.x[i];
  if (cand < t.x[i + 1]) [[likely]] {
    return (z & 256) ? -cand : cand;
  }
  return ziggurat_slow(t, z, Well(key, family, step, channel_block, lane));
}

}  // namespace

double NoiseStream::gaussian(Family family, std::uint64_t channel,
                             std::uint64_t step) const {
  const std::uint64_t b = channel >> 2;
  const std::uint64_t lane = channel & 3;
  const Philox4x64::Counter words = block(family, step, b, 0);
  return ziggurat(tables(), words[lane], key_,
                  static_cast<std::uint64_t>(family), step, b, lane);
}

void NoiseStream::fill_gaussians(Family family, std::uint64_t step,
                                 std::span<double> out) const {
  const ZigguratTables& t = tables();
  const std::uint64_t fam = static_cast<std::uint64_t>(family);
  const std::size_t n = out.size();
  const std::size_t full = n / 4;
  for (std::uint64_t b = 0; b < full; ++b) {
    const Philox4x64::Counter words = block(family, step, b, 0);
    double* dst = out.data() + 4 * b;
    dst[0] = ziggurat(t, words[0], key_, fam, step, b, 0);
    dst[1] = ziggurat(t, words[1], key_, fam, step, b, 1);
    dst[2] = ziggurat(t, words[2], key_, fam, step, b, 2);
    dst[3] = ziggurat(t, words[3], key_, fam, step, b, 3);
  }
  for (std::size_t c = 4 * full; c < n; ++c) {
    const std::uint64_t b = c >> 2;
    const Philox4x64::Counter words = block(family, step, b, 0);
    out[c] = ziggurat(t, words[c & 3], key_, fam, step, b, c & 3);
  }
}

void NoiseStream::fill_increments(Family family, std::uint64_t step,
                                  double sqrt_dt,
                                  std::span<double> out) const {
  fill_gaussians(family, step, out);
  for (double& v : out) v *= sqrt_dt;
}

double NoiseStream::uniform(Family family, std::uint64_t channel,
                            std::uint64_t step) const {
  const Philox4x64::Counter words = block(family, step, channel >> 2, 0);
  return to_unit(words[channel & 3]);
}

double NoiseStream::exponential(Family family, std::uint64_t channel,
                                std::uint64_t step) const {
  return -std::log(1.0 - uniform(family, channel, step));
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t tag) {
  return Philox4x64::generate({tag, 0x5eedu, 0, 0},
                              {base_seed, 0x9e3779b97f4a7c15ULL})[0];
}

}  // namespace spherelab
