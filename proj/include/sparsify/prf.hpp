#ifndef SPARSIFY_PRF_HPP
#define SPARSIFY_PRF_HPP

#include <cstdint>

namespace sparsify {

// Keyed counter-based pseudorandom function. All randomness in the sketching
// path is derived from a 64-bit seed through this function, so identical seeds
// give identical behavior on any platform.
inline uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

// prf(seed, stream, counter) -> 64 uniform-looking bits. Distinct (stream,
// counter) pairs index disjoint positions of one keyed stream.
inline uint64_t prf(uint64_t seed, uint64_t stream, uint64_t counter) {
    uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (stream * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
    h = mix64(h ^ (counter * 0x2545f4914f6cdd1dULL + 0xd6e8feb86659fd93ULL));
    return h;
}

// Derive an independent sub-seed, e.g. one per sketch level.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag) {
    return mix64(prf(seed, 0xdeadbeefULL, tag));
}

// Bernoulli(2^-s) indicator from one PRF draw.
inline bool prf_rate_bit(uint64_t seed, uint64_t stream, uint64_t counter, uint32_t s) {
    if (s == 0) return true;
    if (s >= 64) return false;
    return (prf(seed, stream, counter) >> (64 - s)) == 0;
}

} // namespace sparsify

#endif
