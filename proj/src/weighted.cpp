#include "sparsify/weighted.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "sparsify/prf.hpp"

namespace sparsify {

uint32_t WeightedConfig::bits() const {
    if (w_max == 0) throw std::invalid_argument("WeightedConfig: w_max must be >= 1");
    uint32_t b = 0;
    uint64_t w = w_max;
    while (w) {
        ++b;
        w >>= 1;
    }
    return b;
}

std::vector<std::pair<uint32_t, EdgeUpdate>> route_update(const EdgeUpdate& upd,
                                                          const WeightedConfig& cfg) {
    if (upd.weight == 0 || upd.weight > cfg.w_max)
        throw std::invalid_argument("route_update: weight out of [1, w_max]");
    std::vector<std::pair<uint32_t, EdgeUpdate>> out;
    EdgeUpdate unweighted = upd;
    unweighted.weight = 1;
    for (uint32_t i = 0; i < cfg.bits(); ++i)
        if (upd.weight & (1ull << i)) out.emplace_back(i, unweighted);
    return out;
}

Sparsifier recombine(const std::vector<Sparsifier>& per_bit) {
    if (per_bit.empty()) throw std::invalid_argument("recombine: empty input");
    Sparsifier out;
    out.n = per_bit[0].n;
    out.gamma = 0.0;
    std::map<EdgeId, double> acc;
    for (size_t i = 0; i < per_bit.size(); ++i) {
        if (per_bit[i].n != out.n) throw std::invalid_argument("recombine: mixed n");
        double scale = std::ldexp(1.0, static_cast<int>(i));
        out.gamma += scale * per_bit[i].gamma;
        for (const auto& we : per_bit[i].edges) acc[we.e] += scale * we.w;
    }
    for (const auto& [e, w] : acc) out.edges.push_back({e, w});
    return out;
}

WeightedSketcher::WeightedSketcher(uint32_t n, double epsilon, uint64_t seed,
                                   const WeightedConfig& cfg, const PipelineConstants& consts)
    : cfg_(cfg), epsilon_(epsilon), consts_(consts), sched_(build_schedule(n)) {
    for (uint32_t i = 0; i < cfg_.bits(); ++i)
        planes_.push_back(make_chain_stacks(n, epsilon, derive_seed(seed, 0xb17ull + i), sched_, consts));
}

void WeightedSketcher::ingest(const EdgeUpdate& upd) {
    for (const auto& [bit, sub] : route_update(upd, cfg_)) ingest_all(planes_[bit], sub);
}

void WeightedSketcher::ingest(const std::vector<EdgeUpdate>& stream) {
    for (const auto& upd : stream) ingest(upd);
}

Sparsifier WeightedSketcher::recover(std::vector<Sparsifier>* per_bit_out) const {
    std::vector<Sparsifier> per_bit;
    for (const auto& plane : planes_)
        per_bit.push_back(recover_sparsifier(plane, epsilon_, sched_, consts_));
    Sparsifier out = recombine(per_bit);
    if (per_bit_out) *per_bit_out = std::move(per_bit);
    return out;
}

uint64_t WeightedSketcher::allocated_bytes() const {
    uint64_t total = 0;
    for (const auto& plane : planes_)
        for (const auto& st : plane) total += st.allocated_bytes();
    return total;
}

} // namespace sparsify
