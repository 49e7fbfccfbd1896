#ifndef SPARSIFY_REFINE_HPP
#define SPARSIFY_REFINE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "sparsify/config.hpp"
#include "sparsify/sampling_levels.hpp"
#include "sparsify/sdd_solve.hpp"

namespace sparsify {

// Weighted row subset plus optional diagonal term. Recovered edge weights
// are exactly 2^{s(e)}, the inverse sampling rate.
struct Sparsifier {
    uint32_t n = 0;
    double gamma = 0.0;
    std::vector<CoarseOperator::WeightedEdge> edges; // sorted by EdgeId

    CoarseOperator to_operator() const { return CoarseOperator(n, edges, gamma); }
    Eigen::MatrixXd dense() const { return to_operator().dense(); }

    // `n gamma` header then `u v weight` lines.
    void serialize(std::ostream& out) const;
    static Sparsifier deserialize(std::istream& in);
};

// Per-edge audit record of one sampling decision (test support).
struct SampleDecision {
    EdgeId e = 0;
    double tau = 0.0;      // tau~_e
    double p = 0.0;        // c2 tau~ log n / eps^2
    uint32_t level = 0;    // s(e); 0xffffffff when the sampling is empty
    double estimate = 0.0; // sketch point query at level s(e)
    bool recovered = false;
};

enum class Execution { Serial, Parallel };

// RefineSparsifier: one pass over every candidate edge e in [C(n,2)].
// Precondition (caller's obligation): c K <= K~ <= K on range, with K the
// operator the stack's stream plus gamma I represents. Each candidate gets
// tau~_e from one K~ solve, a sampling level, and a sketch point query at
// that level; e is kept with weight 2^{s(e)} iff the estimate exceeds
// tau~_e / 2. The gamma I term is appended exactly.
Sparsifier refine_sparsifier(const LevelStack& stack, const CoarseOperator& coarse,
                             double gamma, double epsilon, double c,
                             const PipelineConstants& consts = {},
                             Execution exec = Execution::Parallel,
                             std::vector<SampleDecision>* decisions = nullptr);

// Empirical per-edge inclusion frequencies over `trials` independent seeds
// with the exact Laplacian as coarse operator (binomial-oracle support for
// the independent-sampling claim).
struct MarginalReport {
    std::vector<EdgeId> edges;      // present edges of G
    std::vector<double> frequency;  // empirical inclusion rate
    std::vector<double> expected;   // 2^{-s(e)}
    std::vector<uint32_t> level;
};

MarginalReport sampling_marginals_test(uint32_t trials, const EdgeMultiplicitySet& graph,
                                       double epsilon, uint64_t seed0,
                                       const PipelineConstants& consts = {});

} // namespace sparsify

#endif
