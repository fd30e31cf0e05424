#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace detlab {

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over bytes; used for spec hashes and subcommand salts.
std::uint64_t fnv1a64(std::string_view bytes);

/// Seed of the independent stream for sample `index` under master `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Seed derived from a master seed and a textual salt (subcommand name, role tag).
std::uint64_t salted_seed(std::uint64_t seed, std::string_view salt);

/// xoshiro256** with portable uniform/normal/gamma helpers, so every stream is
/// bit-reproducible across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1), never returns 0.
  double uniform_open();
  double normal();
  double gamma(double shape);
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detlab
