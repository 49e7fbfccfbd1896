#ifndef SPARSIFY_CHAIN_HPP
#define SPARSIFY_CHAIN_HPP

#include <cstdint>
#include <vector>

#include "sparsify/refine.hpp"

namespace sparsify {

// Interpolation schedule K(l) = K + gamma(l) I with gamma(l) = lambda_u / 2^l,
// running from a near-identity operator down to K itself.
struct ChainSchedule {
    double lambda_u = 0.0;
    double lambda_l = 0.0;
    uint32_t depth = 0; // d = ceil(log2(lambda_u / lambda_l))

    double gamma(uint32_t level) const;
    // gamma values for the d+2 maintained stacks: gamma(0)..gamma(d), then 0.
    std::vector<double> stack_gammas() const;
};

// Unweighted-graph bounds lambda_u = 2n, lambda_l = 8/n^2.
ChainSchedule build_schedule(uint32_t n);
ChainSchedule build_schedule(double lambda_u, double lambda_l);

// Allocates the d+2 independently seeded stacks for one stream.
std::vector<LevelStack> make_chain_stacks(uint32_t n, double epsilon, uint64_t seed,
                                          const ChainSchedule& sched,
                                          const PipelineConstants& consts = {});

void ingest_all(std::vector<LevelStack>& stacks, const EdgeUpdate& upd);
void ingest_all(std::vector<LevelStack>& stacks, const std::vector<EdgeUpdate>& stream);

// Recursive recovery: base case from gamma(0) I, inductive refinement up the
// chain, then a final gamma = 0 step that yields a genuine weighted-subgraph
// sparsifier. stacks[l] must have been maintained with gamma(l) for
// l in [0,d] and stacks[d+1] with gamma = 0, all fed the identical stream.
Sparsifier recover_sparsifier(const std::vector<LevelStack>& stacks, double epsilon,
                              const ChainSchedule& sched,
                              const PipelineConstants& consts = {},
                              std::vector<Sparsifier>* intermediates = nullptr);

// Dense verification of the three schedule relations (test support).
struct ChainRelationReport {
    bool relation1 = false; // K <=_r K(d) <=_r 2K
    bool relation2 = false; // K(l) <= K(l-1) <= 2K(l) for all l
    bool relation3 = false; // K(0) <= 2 gamma(0) I <= 2 K(0)
    double lambda_min_nonzero = 0.0;
    double lambda_max = 0.0;

    bool all() const { return relation1 && relation2 && relation3; }
};

ChainRelationReport verify_chain_relations(const Eigen::MatrixXd& K, const ChainSchedule& sched);

} // namespace sparsify

#endif
