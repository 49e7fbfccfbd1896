#ifndef SPARSIFY_WEIGHTED_HPP
#define SPARSIFY_WEIGHTED_HPP

#include <cstdint>
#include <vector>

#include "sparsify/chain.hpp"

namespace sparsify {

// Integer weights in [1, W_max] via binary decomposition into bit-plane
// sub-streams, each sketched as an unweighted graph; recombination is
// sum_i 2^i K~_i.
struct WeightedConfig {
    uint64_t w_max = 1;
    uint32_t bits() const; // floor(log2 w_max) + 1
};

// Bit-plane routing: one unweighted update per set bit of the weight.
std::vector<std::pair<uint32_t, EdgeUpdate>> route_update(const EdgeUpdate& upd,
                                                          const WeightedConfig& cfg);

// Weighted union of per-plane sparsifiers with weights scaled by 2^i.
Sparsifier recombine(const std::vector<Sparsifier>& per_bit);

// Full weighted pipeline: bits() independent chains of d+2 stacks.
class WeightedSketcher {
public:
    WeightedSketcher(uint32_t n, double epsilon, uint64_t seed, const WeightedConfig& cfg,
                     const PipelineConstants& consts = {});

    void ingest(const EdgeUpdate& upd);
    void ingest(const std::vector<EdgeUpdate>& stream);

    Sparsifier recover(std::vector<Sparsifier>* per_bit_out = nullptr) const;

    uint64_t allocated_bytes() const;
    const std::vector<std::vector<LevelStack>>& planes() const { return planes_; }
    const ChainSchedule& schedule() const { return sched_; }

private:
    WeightedConfig cfg_;
    double epsilon_;
    PipelineConstants consts_;
    ChainSchedule sched_;
    std::vector<std::vector<LevelStack>> planes_; // [bit][chain level]
};

} // namespace sparsify

#endif
