#include "multiscale/rng.hpp"

#include <boost/math/distributions/normal.hpp>
#include <stdexcept>

namespace multiscale {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void philox_round(std::array<std::uint32_t, 4>& c,
                         const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, c[0], hi0, lo0);
    mul_hi_lo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        philox_round(ctr, key);
    }
    return ctr;
}

std::uint64_t RngStream::next_u64() {
    if (pos_ == 2) {
        buf_ = philox4x32({static_cast<std::uint32_t>(block_),
                           static_cast<std::uint32_t>(block_ >> 32),
                           replicate_, stream_},
                          key_);
        ++block_;
        pos_ = 0;
    }
    const int i = 2 * pos_++;
    return static_cast<std::uint64_t>(buf_[i]) |
           (static_cast<std::uint64_t>(buf_[i + 1]) << 32);
}

double RngStream::normal() { return inverse_normal_cdf(uniform()); }

std::int64_t RngStream::uniform_index(std::int64_t count) {
    if (count <= 0) throw std::invalid_argument("uniform_index: count must be positive");
    const auto idx = static_cast<std::int64_t>(uniform() * static_cast<double>(count));
    return idx < count ? idx : count - 1;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("inverse_normal_cdf: p must lie in (0,1)");
    static const boost::math::normal_distribution<double> unit_normal;
    return boost::math::quantile(unit_normal, p);
}

}  // namespace multiscale
