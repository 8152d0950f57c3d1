#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include <openssl/sha.h>

#include "lastream/error.hpp"

namespace lastream {

/// Seeded degree-3 polynomial hash over the Mersenne prime field 2^31 - 1.
///
/// Coefficients are the first four outputs of std::mt19937_64(seed), each
/// reduced mod P. mt19937_64 is fully specified by the standard, so a seed
/// maps to the same coefficients on every platform. The polynomial is
/// evaluated in Horner form with a modular reduction after every step and the
/// field element is finally folded into [0, range).
class PolyHash {
public:
    static constexpr std::uint64_t kPrime = (std::uint64_t{1} << 31) - 1;

    PolyHash() : PolyHash(0, 2) {}

    PolyHash(std::uint64_t seed, std::uint64_t range) : seed_(seed), range_(range) {
        detail::require(range >= 1, "PolyHash range must be >= 1");
        std::mt19937_64 gen(seed);
        for (auto& c : coeffs_) c = gen() % kPrime;
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t range() const noexcept { return range_; }
    /// (c0, c1, c2, c3)
    const std::array<std::uint64_t, 4>& coefficients() const noexcept { return coeffs_; }

    /// Field value in [0, P) before range folding.
    std::uint64_t raw(std::uint64_t x) const noexcept {
        const std::uint64_t xr = x % kPrime;
        std::uint64_t acc = coeffs_[3];
        acc = (acc * xr + coeffs_[2]) % kPrime;
        acc = (acc * xr + coeffs_[1]) % kPrime;
        acc = (acc * xr + coeffs_[0]) % kPrime;
        return acc;
    }

    std::uint64_t operator()(std::uint64_t x) const noexcept { return raw(x) % range_; }

    /// Uniform variate in [0, 1): raw / P.
    double unit(std::uint64_t x) const noexcept {
        return static_cast<double>(raw(x)) / static_cast<double>(kPrime);
    }

    /// +1 / -1 as 2 * h(x) - 1. Requires range 2.
    int sign(std::uint64_t x) const {
        detail::require(range_ == 2, "sign hash requires range 2");
        return 2 * static_cast<int>((*this)(x)) - 1;
    }

    friend bool operator==(const PolyHash& a, const PolyHash& b) {
        return a.seed_ == b.seed_ && a.range_ == b.range_ && a.coeffs_ == b.coeffs_;
    }

private:
    std::uint64_t seed_;
    std::uint64_t range_;
    std::array<std::uint64_t, 4> coeffs_{};
};

inline std::uint64_t poly_hash(const PolyHash& h, std::uint64_t x) { return h(x); }
inline int sign_hash(const PolyHash& h, std::uint64_t x) { return h.sign(x); }

/// SHA-256 membership variate: digest of the decimal string of (item + rep)
/// followed by the decimal string of item, top 64 bits scaled into [0, 1).
inline double sha256_unit(std::uint64_t item, std::uint64_t rep) {
    const std::string text = std::to_string(item + rep) + std::to_string(item);
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest.data());
    std::uint64_t top = 0;
    for (int i = 0; i < 8; ++i) top = (top << 8) | digest[static_cast<std::size_t>(i)];
    return static_cast<double>(top >> 11) * 0x1.0p-53;
}

enum class MembershipHash { poly, sha256 };

/// Deterministic "is item sampled at rate q" decision keyed on (seed, item).
class MembershipSampler {
public:
    MembershipSampler() = default;
    MembershipSampler(std::uint64_t seed, double rate, MembershipHash mode = MembershipHash::poly)
        : hash_(seed, PolyHash::kPrime), seed_(seed), rate_(rate), mode_(mode) {
        detail::require(rate > 0.0 && rate <= 1.0, "sampling rate must lie in (0, 1]");
    }

    double variate(std::uint64_t item) const {
        return mode_ == MembershipHash::poly ? hash_.unit(item) : sha256_unit(item, seed_);
    }
    bool selected(std::uint64_t item) const { return rate_ >= 1.0 || variate(item) < rate_; }

    double rate() const noexcept { return rate_; }
    std::uint64_t seed() const noexcept { return seed_; }
    MembershipHash mode() const noexcept { return mode_; }

private:
    PolyHash hash_{0, PolyHash::kPrime};
    std::uint64_t seed_ = 0;
    double rate_ = 1.0;
    MembershipHash mode_ = MembershipHash::poly;
};

/// Mixes a base seed with a stream of small integers (repetition index,
/// component tag) into a fresh 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (a + 1) + 0xBF58476D1CE4E5B9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace lastream
