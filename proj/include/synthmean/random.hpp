#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace synthmean {

/// Deterministic random stream (xoshiro256++ with splitmix64 seeding).
///
/// Replicate r of a procedure seeded with s uses the substream (s, r):
/// identical (seed, index) pairs produce identical variate sequences no
/// matter how replicates are scheduled across threads. Normal variates are
/// produced by Box-Muller; each next_normal() consumes exactly one variate
/// from the stream's normal sequence.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : RandomStream(seed, 0) {}

    RandomStream(std::uint64_t seed, std::uint64_t index);

    static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
        return RandomStream(seed, index);
    }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double();

    /// Uniform integer in [0, bound). bound must be nonzero.
    std::uint64_t next_below(std::uint64_t bound);

    /// Standard normal variate.
    double next_normal();

  private:
    std::array<std::uint64_t, 4> state_;
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

/// Mixes a root seed with a procedure label so that independent procedures
/// (estimation of each method, diagnostics, figure simulation) never share
/// substreams.
std::uint64_t procedure_seed(std::uint64_t root_seed, std::string_view procedure);

} // namespace synthmean
