#include "stickylab/random.hpp"

#include <cmath>
#include <numbers>

namespace stickylab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                    std::uint32_t& hi) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

NormalStream::NormalStream(SeedSpec seed, std::uint32_t substream) noexcept
    : key_{static_cast<std::uint32_t>(seed.master_seed),
           static_cast<std::uint32_t>(seed.master_seed >> 32)},
      counter_{0, substream, static_cast<std::uint32_t>(seed.path_index),
               static_cast<std::uint32_t>(seed.path_index >> 32)} {}

void NormalStream::refill() noexcept {
  block_ = Philox4x32::generate(counter_, key_);
  ++counter_[0];
  block_pos_ = 0;
}

std::uint64_t NormalStream::next_u64() noexcept {
  if (block_pos_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(block_[block_pos_]) << 32) |
                          block_[block_pos_ + 1];
  block_pos_ += 2;
  return v;
}

double NormalStream::uniform() noexcept {
  // 53 random bits shifted into (0, 1): never exactly 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::next() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

}  // namespace stickylab
