#pragma once

#include <array>
#include <cstdint>

namespace stickylab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The output
// is a pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

// Standard-normal stream for one (master_seed, path_index, substream). The
// counter layout is [block, substream, path_lo, path_hi] with the master seed
// as key, so streams for different paths never overlap and can be drawn in
// any order across threads.
class NormalStream {
 public:
  explicit NormalStream(SeedSpec seed, std::uint32_t substream = 0) noexcept;

  double next() noexcept;
  // Uniform on the open interval (0, 1).
  double uniform() noexcept;
  std::uint64_t next_u64() noexcept;

 private:
  void refill() noexcept;

  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stickylab
