#ifndef SPARSIFY_SAMPLING_LEVELS_HPP
#define SPARSIFY_SAMPLING_LEVELS_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sparsify/config.hpp"
#include "sparsify/graph_core.hpp"
#include "sparsify/hh_sketch.hpp"

namespace sparsify {

// Nested geometric subsampling of the edge space with one sketch per level.
// Level 0 holds every streamed edge; edge e participates in levels
// 0..L(e) with L(e) = max{s : h_1(e) = ... = h_s(e) = 1}, so level s keeps
// edges at rate 2^-s and the levels are nested. The n identity rows
// sqrt(gamma) * 1_v occupy indices C(n,2)..C(n,2)+n-1 of every level; they
// are kept in a deterministic side sketch so merging stays purely additive.
class LevelStack {
public:
    LevelStack() = default;
    LevelStack(uint32_t n, double epsilon, double gamma, uint64_t seed,
               const PipelineConstants& consts = {});

    uint32_t n() const { return n_; }
    uint32_t levels() const { return static_cast<uint32_t>(edge_sketches_.size()); }
    double gamma() const { return gamma_; }
    double epsilon() const { return epsilon_; }
    uint64_t seed() const { return seed_; }
    uint64_t edge_index_space() const { return num_pairs(n_); }

    // Deepest level whose nested hash chain accepts e.
    uint32_t edge_level(EdgeId e) const;

    void ingest(const EdgeUpdate& upd);
    void ingest(const std::vector<EdgeUpdate>& stream);

    // Sketch estimate of x^s(e) = (B_{gamma,s} y)(e) for query vector y.
    double edge_presence_value(EdgeId e, const Eigen::VectorXd& y, uint32_t s) const;

    // Fraction of the C(n,2) edge ids with L(e) >= s (test support;
    // expected 2^-s).
    double level_inclusion_rate(uint32_t s) const;

    void merge(const LevelStack& other);
    bool table_equal(const LevelStack& other) const;

    uint64_t allocated_bytes() const;
    uint64_t dense_bytes() const;

    // header + per-level edge-sketch blobs; gamma and seed embedded so
    // recovery is self-contained (identity rows are reconstructed).
    void serialize(std::ostream& out) const;
    static LevelStack deserialize(std::istream& in);

private:
    uint32_t n_ = 0;
    double epsilon_ = 0.0;
    double gamma_ = 0.0;
    uint64_t seed_ = 0;
    PipelineConstants consts_;
    std::vector<HHSketch> edge_sketches_;
    std::vector<UnitRowTable> identity_tables_; // deterministic, never merged

    void build_sketches();
};

// Number of subsampling levels: ceil(log2 C(n,2)) + 10.
uint32_t level_count_for(uint32_t n);

} // namespace sparsify

#endif
