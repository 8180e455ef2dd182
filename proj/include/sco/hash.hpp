// Keyed pseudorandom streams: every random decision in the pipeline is a pure
// function of (root seed, purpose tag, integer key fields), so results are
// replayable and independent of execution order and thread count.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sco/common.hpp"

namespace sco {

// Domain separators. Distinct tags yield statistically independent substreams.
enum class StreamTag : u64 {
    WalkInit = 1,         // walks backing the preprocessing transition samples
    WalkQuery = 2,        // walks run at query time
    SampleIS = 3,         // the oracle's column sample I_S
    SampleS = 4,          // center-search vertex samples
    ConductanceSize = 5,  // size-estimation phase of the conductance tester
    ConductanceEdge = 6,  // boundary-sampling phase of the conductance tester
    TieBreak = 7,         // random completion of the output partition
    Generator = 8,        // synthetic instance construction
    GramInit = 9,         // second transition sample feeding the collision Gram
    GramInitPair = 10,    // first transition sample feeding the collision Gram
};

struct Seed {
    u64 hi = 0;
    u64 lo = 0;

    bool operator==(const Seed&) const = default;

    // Accepts up to 32 hex digits, optionally prefixed with 0x.
    static Seed from_hex(const std::string& text) {
        std::string s = text;
        if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s = s.substr(2);
        if (s.empty() || s.size() > 32) throw std::invalid_argument("seed: expected 1..32 hex digits");
        Seed out;
        std::string padded = std::string(32 - s.size(), '0') + s;
        auto nibble = [](char c) -> u64 {
            if (c >= '0' && c <= '9') return static_cast<u64>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<u64>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<u64>(c - 'A' + 10);
            throw std::invalid_argument("seed: invalid hex digit");
        };
        for (int i = 0; i < 16; ++i) out.hi = (out.hi << 4) | nibble(padded[static_cast<size_t>(i)]);
        for (int i = 16; i < 32; ++i) out.lo = (out.lo << 4) | nibble(padded[static_cast<size_t>(i)]);
        return out;
    }

    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s(32, '0');
        for (int i = 0; i < 16; ++i) s[static_cast<size_t>(15 - i)] = digits[(hi >> (4 * i)) & 0xf];
        for (int i = 0; i < 16; ++i) s[static_cast<size_t>(31 - i)] = digits[(lo >> (4 * i)) & 0xf];
        return s;
    }
};

// Identifies one lazy-walk step: which start vertex, which repetition of the
// median boosting, which walk, which step. Injectively folded into the hash.
struct WalkKey {
    StreamTag tag = StreamTag::WalkInit;
    u64 start = 0;
    u64 repetition = 0;
    u64 walk = 0;
    u64 step = 0;
};

namespace detail {

inline u64 mix64(u64 x) {
    // splitmix64 finalizer; full-avalanche.
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Keyed 128->64 mixer over five 64-bit words. Sequential absorption of each
// word through the splitmix finalizer keeps the encoding injective per word.
inline u64 keyed_hash(const Seed& seed, u64 a, u64 b, u64 c, u64 d, u64 e) {
    u64 h = mix64(seed.hi ^ 0x8e2f0c5e8499a3d1ULL);
    h = mix64(h ^ seed.lo);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    h = mix64(h ^ d);
    h = mix64(h ^ e);
    return h;
}

}  // namespace detail

// Per-(seed, tag, start, repetition) stream: the slow absorption of those
// fields happens once, each step then costs two avalanche rounds plus a
// widening multiply. Fields are packed injectively (tag 4 bits, repetition 7,
// start 51; walk 40, step 16, nonce 8 -- far beyond desk-scale ranges).
class WalkStream {
public:
    WalkStream(const Seed& seed, StreamTag tag, u64 start, u64 repetition, u32 d)
        : head_(detail::mix64(seed.hi ^ ((static_cast<u64>(tag) << 58) |
                                         (repetition << 51) | start))),
          lo_(seed.lo),
          d_(d),
          outcomes_(2ULL * d),
          reject_below_((0 - outcomes_) % outcomes_) {
        if (d == 0) throw std::invalid_argument("WalkStream: d must be positive");
    }

    // -1 = stay (probability exactly 1/2), else a slot in [0, d), each 1/(2d).
    // Range reduction is multiply-shift with rejection, so the marginals are
    // exact; the rejection nonce is part of the key, keeping the retry chain
    // a pure function of the stream state.
    int step_choice(u64 walk, u64 step) const {
        const u64 word = (walk << 24) | (step << 8);
        for (u64 nonce = 0;; ++nonce) {
            const u64 h = detail::mix64(detail::mix64(head_ ^ lo_ ^ (word | nonce)));
            const unsigned __int128 m = static_cast<unsigned __int128>(h) * outcomes_;
            if (static_cast<u64>(m) < reject_below_) continue;
            const u64 r = static_cast<u64>(m >> 64);
            return r < d_ ? static_cast<int>(r) : -1;
        }
    }

private:
    u64 head_;
    u64 lo_;
    u32 d_;
    u64 outcomes_;
    u64 reject_below_;
};

inline int step_choice(const Seed& seed, const WalkKey& key, u32 d) {
    if (d == 0) throw std::invalid_argument("step_choice: d must be positive");
    return WalkStream(seed, key.tag, key.start, key.repetition, d)
        .step_choice(key.walk, key.step);
}

// Uniform value in [0, bound), keyed by (tag, a, b). Rejection keeps the
// marginal exact.
inline u64 uniform_below(const Seed& seed, StreamTag tag, u64 a, u64 b, u64 bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const u64 limit = (~0ULL / bound) * bound;
    for (u64 nonce = 0;; ++nonce) {
        const u64 h = detail::keyed_hash(seed, static_cast<u64>(tag), a, b, nonce, 0x9044c6e3ULL);
        if (h >= limit) continue;
        return h % bound;
    }
}

// Deterministic uniform vertex sample. With replacement draws are indexed
// draws; without replacement we keep drawing until `count` distinct ids
// accumulate (requires count <= n).
inline std::vector<u32> sample_vertices(const Seed& seed, StreamTag tag, u64 round, size_t count,
                                        size_t n, bool with_replacement) {
    if (count < 1) throw std::invalid_argument("sample_vertices: count must be >= 1");
    if (n < 1) throw std::invalid_argument("sample_vertices: n must be >= 1");
    if (!with_replacement && count > n)
        throw std::invalid_argument("sample_vertices: count > n without replacement");
    std::vector<u32> out;
    out.reserve(count);
    if (with_replacement) {
        for (size_t i = 0; i < count; ++i)
            out.push_back(static_cast<u32>(uniform_below(seed, tag, round, i, n)));
        return out;
    }
    std::vector<bool> taken(n, false);
    u64 draw = 0;
    while (out.size() < count) {
        const u32 v = static_cast<u32>(uniform_below(seed, tag, round, draw++, n));
        if (!taken[v]) {
            taken[v] = true;
            out.push_back(v);
        }
    }
    return out;
}

}  // namespace sco
