#pragma once

#include <cstdint>

namespace mmv {

/// xoshiro256++ with splitmix64 seeding; Gaussian draws via Box-Muller.
/// Fixed algorithm so sequences are identical across platforms and runs.
class RngState {
 public:
  explicit RngState(uint64_t seed);

  uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // N(0, 1)

  /// Independent stream derived from (this seed, stream index); the parent
  /// state is not advanced.
  RngState derive(uint64_t stream) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mmv
