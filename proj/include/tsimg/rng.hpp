#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tsimg {

/// Identifies one independent random stream: a 64-bit seed (the Philox key)
/// and a 64-bit stream index (the upper half of the Philox counter).
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Derives a child stream for a named sub-task. Children of the same parent
  /// with different tags, and children of different parents, do not overlap
  /// except with negligible probability.
  [[nodiscard]] RngStream child(std::uint64_t tag) const noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Philox4x32-10 counter-based generator.
///
/// The 128-bit counter is (block index, stream index) and the 64-bit key is the
/// seed, so any (seed, stream) pair can be materialised in O(1) on any thread
/// without coordination. Satisfies std::uniform_random_bit_generator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RngStream id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer on the closed range [lo, hi], unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept;
  /// Standard normal deviate (Box-Muller).
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  [[nodiscard]] const RngStream& id() const noexcept { return id_; }

  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  /// The raw Philox4x32-10 bijection.
  static Block philox(Block counter, Key key) noexcept;

 private:
  void refill() noexcept;

  RngStream id_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int cursor_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tsimg
