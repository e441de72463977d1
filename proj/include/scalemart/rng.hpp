#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace scalemart {

/// Independent random stream per (seed, stream id, domain).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
/// are fully specified by the standard, so streams are reproducible across
/// platforms. Uniforms take the top 53 bits; normals use the Marsaglia polar
/// method and cache the second variate of each pair.
class PathStream {
 public:
  enum Domain : std::uint32_t { kEnsemble = 1, kPath = 2, kFbm = 3, kDaily = 4, kTest = 99 };

  PathStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t domain) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), domain};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double a, b, r;
    do {
      a = 2.0 * uniform() - 1.0;
      b = 2.0 * uniform() - 1.0;
      r = a * a + b * b;
    } while (r >= 1.0 || r == 0.0);
    const double f = std::sqrt(-2.0 * std::log(r) / r);
    spare_ = b * f;
    has_spare_ = true;
    return a * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace scalemart
