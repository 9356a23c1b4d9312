#pragma once

#include <array>
#include <cstdint>

namespace multiscale {

// One application of the Philox-4x32 keyed bijection, 10 rounds.
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Identifies one random stream: a 64-bit seed plus a (stream, replicate)
// pair. Distinct pairs give statistically independent streams, so Monte
// Carlo replicates can be generated in any order or in parallel and still
// reproduce bit-exactly.
struct SeedRecord {
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;
    std::uint32_t replicate = 0;

    SeedRecord with_replicate(std::uint32_t r) const { return {seed, stream, r}; }
    bool operator==(const SeedRecord&) const = default;
};

// Counter-based generator over the Philox block function. The key is the
// 64-bit seed; the 128-bit counter holds (block index, replicate, stream),
// so the word sequence is a pure function of the SeedRecord.
//
// Normal variates are produced by applying the inverse normal CDF to a
// 53-bit uniform draw (one variate per draw; no rejection), which keeps
// the stream position deterministic.
class RngStream {
  public:
    explicit RngStream(SeedRecord rec)
        : key_{static_cast<std::uint32_t>(rec.seed),
               static_cast<std::uint32_t>(rec.seed >> 32)},
          replicate_(rec.replicate),
          stream_(rec.stream) {}

    RngStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t replicate)
        : RngStream(SeedRecord{seed, stream, replicate}) {}

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1), 53-bit resolution.
    double uniform() {
        const double kScale = 0x1.0p-53;
        return (static_cast<double>(next_u64() >> 11) + 0.5) * kScale;
    }

    // Standard normal via the inverse CDF.
    double normal();

    // Uniform draw from {0, 1, ..., count-1}.
    std::int64_t uniform_index(std::int64_t count);

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t replicate_ = 0;
    std::uint32_t stream_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 2;  // u64 halves consumed from buf_; 2 forces a refill
};

// Inverse of the standard normal CDF on (0,1). Strictly increasing;
// accurate to full double precision (Boost.Math erf_inv underneath).
double inverse_normal_cdf(double p);

}  // namespace multiscale
