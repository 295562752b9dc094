#include "rhsim/bitset.hpp"

#include <bit>

namespace rhsim {

namespace {

std::uint64_t mask_from(std::size_t bit) { return ~std::uint64_t{0} << (bit & 63); }

}  // namespace

std::size_t DynamicBitset::count(std::size_t lo, std::size_t hi) const {
  if (lo >= hi) return 0;
  const std::size_t wl = lo >> 6, wh = (hi - 1) >> 6;
  const std::uint64_t last = (hi & 63) ? ~mask_from(hi) : ~std::uint64_t{0};
  if (wl == wh) return std::popcount(words_[wl] & mask_from(lo) & last);
  std::size_t n = std::popcount(words_[wl] & mask_from(lo));
  for (std::size_t w = wl + 1; w < wh; ++w) n += std::popcount(words_[w]);
  return n + std::popcount(words_[wh] & last);
}

std::size_t DynamicBitset::select(std::size_t lo, std::size_t k) const {
  if (lo >= bits_) return bits_;
  std::size_t w = lo >> 6;
  std::uint64_t word = words_[w] & mask_from(lo);
  while (true) {
    const auto n = static_cast<std::size_t>(std::popcount(word));
    if (k < n) {
      for (; k > 0; --k) word &= word - 1;
      const std::size_t pos = (w << 6) + std::countr_zero(word);
      return pos < bits_ ? pos : bits_;
    }
    k -= n;
    if (++w >= words_.size()) return bits_;
    word = words_[w];
  }
}

}  // namespace rhsim
