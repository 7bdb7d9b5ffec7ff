#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., Random123). Draws are a
// pure function of (key, counter), so any sample can be regenerated in any
// order on any thread.

#include <array>
#include <cstdint>
#include <string_view>

namespace d2d {

class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key);
};

/// Uniform double in [0, 1) with 53 random bits, keyed by (seed, a, b, c).
double uniform_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

/// FNV-1a, 64 bit. Stable across platforms and builds, unlike std::hash.
std::uint64_t stable_hash(std::string_view text);

/// Sequential stream over the counter space: (seed, stream) fixes the stream,
/// successive calls advance the counter.
class CounterStream {
  public:
    CounterStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    double next_unit() { return uniform_unit(seed_, stream_, position_++, kStreamDomain); }
    /// Uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound);

  private:
    static constexpr std::uint64_t kStreamDomain = 0x5354524541'4dULL;
    std::uint64_t seed_, stream_, position_ = 0;
};

} // namespace d2d
