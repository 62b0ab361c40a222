// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

namespace sser {

// Error with a short machine-parsable code: "parse", "validation", "config",
// "io", "usage", "training", "overflow".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const char* code, const std::string& msg) {
    throw Error(code, msg);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. std::* distributions are not portable across standard
// libraries, so all draws are derived from the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x632be59bd9b4e019ULL)) {}

    std::uint64_t next() {
        // xorshift64* on a splitmix-initialized state
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // uniform in [0, 1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        return lo + std::int64_t(next() % std::uint64_t(hi - lo + 1));
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sd * spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586 * u2);
        has_spare_ = true;
        return mean + sd * mag * std::cos(6.283185307179586 * u2);
    }

    // Independent child stream; does not disturb this stream.
    Rng fork(std::uint64_t tag) const { return Rng(splitmix64(state_ ^ splitmix64(tag))); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// FNV-1a, used for output digests in tests and the bench report.
class Digest {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    template <typename T>
    void update_span(std::span<const T> s) {
        update(s.data(), s.size_bytes());
    }
    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// round half away from zero
inline std::int64_t iround(double v) { return std::llround(v); }

// integer division, round half away from zero; den > 0
inline std::int64_t div_round_half_away(std::int64_t num, std::int64_t den) {
    const std::int64_t half = den / 2;
    return (num >= 0) ? (num + half) / den : (num - half) / den;
}

}  // namespace sser
