#ifndef TEST_UTIL_HPP
#define TEST_UTIL_HPP

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "sparsify/graph_core.hpp"

namespace testutil {

using namespace sparsify;

// Erdos-Renyi G(n, p) insertions, deterministic in seed.
inline std::vector<EdgeUpdate> random_graph(uint32_t n, double p, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<EdgeUpdate> out;
    for (uint32_t u = 0; u < n; ++u)
        for (uint32_t v = u + 1; v < n; ++v)
            if (unif(rng) < p) out.push_back({StreamOp::Insert, u, v, 1});
    return out;
}

// Random connected graph: spanning path plus G(n, p) extras.
inline std::vector<EdgeUpdate> random_connected_graph(uint32_t n, double p, uint64_t seed) {
    std::set<std::pair<uint32_t, uint32_t>> edges;
    for (uint32_t v = 0; v + 1 < n; ++v) edges.insert({v, v + 1});
    for (const auto& upd : random_graph(n, p, seed)) edges.insert({upd.u, upd.v});
    std::vector<EdgeUpdate> out;
    for (auto [u, v] : edges) out.push_back({StreamOp::Insert, u, v, 1});
    return out;
}

// w x h grid graph (vertex (x, y) -> y * w + x).
inline std::vector<EdgeUpdate> grid_graph(uint32_t w, uint32_t h) {
    std::vector<EdgeUpdate> out;
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x) {
            uint32_t v = y * w + x;
            if (x + 1 < w) out.push_back({StreamOp::Insert, v, v + 1, 1});
            if (y + 1 < h) out.push_back({StreamOp::Insert, v, v + w, 1});
        }
    return out;
}

inline std::vector<EdgeUpdate> complete_graph(uint32_t n) {
    std::vector<EdgeUpdate> out;
    for (uint32_t u = 0; u < n; ++u)
        for (uint32_t v = u + 1; v < n; ++v) out.push_back({StreamOp::Insert, u, v, 1});
    return out;
}

inline EdgeMultiplicitySet to_set(uint32_t n, const std::vector<EdgeUpdate>& stream,
                                  bool weighted = false) {
    EdgeMultiplicitySet s(n);
    for (const auto& upd : stream) s.apply(upd, weighted);
    return s;
}

} // namespace testutil

#endif
