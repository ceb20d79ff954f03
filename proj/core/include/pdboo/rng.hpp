#pragma once

#include <cstdint>

namespace pdboo {

/*!
 * Deterministic random stream: xoshiro256++ seeded through splitmix64.
 *
 * All distributions are generated by fixed, documented algorithms (Box–Muller
 * normals, Marsaglia–Tsang gammas) rather than the standard-library
 * distribution templates, whose output sequences are implementation-defined.
 * This is what makes reruns byte-identical across toolchains.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Mixing function used for seeding and stream derivation (splitmix64 step).
  static std::uint64_t splitmix64(std::uint64_t& state);

  /// Derive the stream seed for run `index` from a master seed.
  /// Documented scheme: two splitmix64 steps over (master, index).
  static std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform double in (0, 1]; never returns 0 (safe for logs).
  double uniform_pos();

  double uniform(double lo, double hi);

  /// Uniform integer in [0, n); n >= 1.
  int uniform_int(int n);

  /// Standard normal via Box–Muller, second draw of each pair cached.
  double normal();

  /// Gamma(shape, 1) via Marsaglia–Tsang; shape < 1 handled by the
  /// Gamma(shape+1)·U^(1/shape) boost. shape > 0 required.
  double gamma(double shape);

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace pdboo
