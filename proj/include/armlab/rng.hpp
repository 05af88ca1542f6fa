#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace armlab {

/// Roles a replicate draws randomness for. Each role gets its own substream
/// so that, e.g., an agent's tie-breaking never perturbs the reward sequence.
enum class StreamRole : std::uint64_t {
  kPermutation = 1,
  kReward = 2,
  kAgent = 3,
  kDecide = 4,
  kHistory = 5,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// FNV-1a, used to fold experiment names into stream ids.
constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct StreamId {
  std::uint64_t experiment = 0;
  std::uint64_t replicate = 0;
  StreamRole role = StreamRole::kReward;
};

/// Deterministic substream of a master seed. Identical (master_seed, id)
/// pairs produce identical draw sequences.
class SeededRng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit SeededRng(std::uint64_t master_seed, StreamId id = {})
      : engine_(derive_seed(master_seed, id)) {}

  static constexpr std::uint64_t derive_seed(std::uint64_t master_seed, StreamId id) {
    std::uint64_t h = detail::splitmix64(master_seed);
    h = detail::splitmix64(h ^ id.experiment);
    h = detail::splitmix64(h ^ id.replicate);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(id.role));
    return h;
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::size_t below(std::size_t n) {
    const auto bound = static_cast<std::uint64_t>(n);
    std::uint64_t x = engine_();
    auto m = static_cast<unsigned __int128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = engine_();
        m = static_cast<unsigned __int128>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Beta(a, b) via two gamma draws.
  double beta(double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(engine_);
    const double y = std::gamma_distribution<double>(b, 1.0)(engine_);
    return x / (x + y);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace armlab
