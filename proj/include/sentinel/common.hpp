#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sentinel {

/// Raised when inputs or configuration violate a documented precondition.
/// CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on filesystem trouble (unreadable/unwritable paths).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a persisted artifact is corrupt, truncated, or has an
/// unsupported version.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a model container holds a different kind than requested.
class WrongModelKindError : public FormatError {
public:
    using FormatError::FormatError;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent seed for a named sub-stream of a base seed, so
/// that unrelated random consumers (init vs. shuffling vs. per-tree RNGs)
/// never share state.
inline std::uint64_t seed_stream(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ (stream * 0xd6e8feb86659fd93ULL));
}

// Stream tags used across the library. Values are arbitrary but frozen:
// changing them changes every derived artifact.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kTrainLoop = 3;
inline constexpr std::uint64_t kDeltaUpdate = 4;
inline constexpr std::uint64_t kTeacherTree = 5;
inline constexpr std::uint64_t kIsolationTree = 6;
inline constexpr std::uint64_t kSynth = 7;
inline constexpr std::uint64_t kAttackSample = 8;
inline constexpr std::uint64_t kSearchTrial = 9;
}  // namespace streams

/// Deterministic RNG used everywhere. Wraps std::mt19937_64 (whose raw
/// output is pinned by the standard) and derives all values from raw
/// 64-bit draws, so results are reproducible across platforms and
/// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Unbiased via rejection sampling. n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x > limit);
        return x % n;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one value per call, two draws).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    /// k distinct values from [0, n), in selection order (partial Fisher-Yates).
    std::vector<std::size_t> pick_distinct(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

/// Always-on internal invariant check (independent of NDEBUG). Violations
/// indicate a bug in this library, not bad user input.
#define SENTINEL_CHECK(cond, msg)                                  \
    do {                                                           \
        if (!(cond)) throw std::logic_error(std::string("internal invariant violated: ") + (msg)); \
    } while (0)

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

/// Shortest round-trip decimal rendering of a double (via std::to_chars).
std::string format_double(double value);

}  // namespace sentinel
