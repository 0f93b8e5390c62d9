#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace covest {

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a master seed and a path of keys, e.g.
/// (master, trial, stream-id, batch). Distinct paths give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded random stream. Never shared between concurrent tasks; derive a
/// child instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  Rng child(std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(engine_(), path));
  }

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stream identifiers used when deriving per-trial seeds.
namespace stream_id {
inline constexpr std::uint64_t kData = 0xda7a;
inline constexpr std::uint64_t kMask = 0x3a5c;
inline constexpr std::uint64_t kModel = 0x30de;
}  // namespace stream_id

}  // namespace covest
