#pragma once

#include <array>
#include <cstdint>

#include "locality_lab/types.hpp"

namespace locality_lab {

// Counter-based Philox4x32-10 generator. A (seed, stream) pair fully
// determines the sequence, so chain c of a run can use stream c without
// depending on how many other chains exist.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  Vector normal_vector(Index n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stateless mixing used to derive sub-seeds (e.g. per trial, per instance).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace locality_lab
