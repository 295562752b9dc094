#pragma once

#include <cstdint>
#include <vector>

namespace rhsim {

/// Fixed-size bitset with range counting and in-range selection.
class DynamicBitset {
 public:
  DynamicBitset() = default;
  explicit DynamicBitset(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const { return bits_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  /// Returns true if the bit was newly set.
  bool set(std::size_t i) {
    auto& w = words_[i >> 6];
    const std::uint64_t m = std::uint64_t{1} << (i & 63);
    const bool fresh = !(w & m);
    w |= m;
    return fresh;
  }
  /// Set bits in [lo, hi).
  std::size_t count(std::size_t lo, std::size_t hi) const;
  std::size_t count() const { return count(0, bits_); }
  /// Position of the k-th (0-based) set bit at or after lo; size() if none.
  std::size_t select(std::size_t lo, std::size_t k) const;
  std::size_t memory_bytes() const { return words_.size() * sizeof(std::uint64_t); }

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace rhsim
