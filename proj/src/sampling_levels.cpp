#include "sparsify/sampling_levels.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "sparsify/prf.hpp"

namespace sparsify {

namespace {

constexpr uint32_t kMagic = 0x4c53544bu; // "LSTK"
constexpr uint32_t kVersion = 1;
constexpr uint64_t kLevelHashStream = 101;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("LevelStack: truncated input");
    return v;
}

} // namespace

uint32_t level_count_for(uint32_t n) {
    if (n < 2) throw std::invalid_argument("level_count_for: n < 2");
    double m = static_cast<double>(num_pairs(n));
    return static_cast<uint32_t>(std::ceil(std::log2(m))) + 10;
}

LevelStack::LevelStack(uint32_t n, double epsilon, double gamma, uint64_t seed,
                       const PipelineConstants& consts)
    : n_(n), epsilon_(epsilon), gamma_(gamma), seed_(seed), consts_(consts) {
    if (n < 2) throw std::invalid_argument("LevelStack: n < 2");
    if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("LevelStack: epsilon out of (0,1)");
    if (gamma < 0.0) throw std::invalid_argument("LevelStack: gamma < 0");
    build_sketches();
}

void LevelStack::build_sketches() {
    uint32_t S = level_count_for(n_);
    uint64_t N = num_pairs(n_) + n_; // edge rows then identity rows
    double eta = eta_for(epsilon_, n_, consts_);
    edge_sketches_.reserve(S);
    identity_tables_.reserve(S);
    // identity rows present with probability 1 at every level
    std::vector<std::pair<uint64_t, RowEntry>> unit_rows;
    if (gamma_ > 0.0) {
        double root_gamma = std::sqrt(gamma_);
        for (uint32_t v = 0; v < n_; ++v)
            unit_rows.emplace_back(num_pairs(n_) + v, RowEntry{v, root_gamma});
    }
    for (uint32_t s = 0; s < S; ++s) {
        HHParams p = hh_params_for(N, eta, derive_seed(seed_, s), consts_.cw, consts_.cd);
        edge_sketches_.emplace_back(p, n_, consts_.mem_cap_bytes);
        identity_tables_.emplace_back(p, n_, unit_rows);
    }
}

uint32_t LevelStack::edge_level(EdgeId e) const {
    uint32_t S = levels();
    uint32_t L = 0;
    // h_s(e) bits come from one PRF draw per (level, edge)
    while (L + 1 < S && (prf(seed_, kLevelHashStream, (L + 1) * (num_pairs(n_) + 1) + e) & 1u))
        ++L;
    return L;
}

void LevelStack::ingest(const EdgeUpdate& upd) {
    EdgeId e = edge_index(upd.u, upd.v, n_);
    auto [u, v] = edge_pair(e, n_);
    RowEntry row[2] = {{u, 1.0}, {v, -1.0}};
    double sign = upd.op == StreamOp::Insert ? 1.0 : -1.0;
    uint32_t L = edge_level(e);
    for (uint32_t s = 0; s <= L; ++s)
        edge_sketches_[s].update(e, std::span<const RowEntry>(row, 2), sign);
}

void LevelStack::ingest(const std::vector<EdgeUpdate>& stream) {
    for (const auto& upd : stream) ingest(upd);
}

double LevelStack::edge_presence_value(EdgeId e, const Eigen::VectorXd& y, uint32_t s) const {
    if (s >= levels()) throw std::invalid_argument("edge_presence_value: level out of range");
    return edge_sketches_[s].point_query_with(identity_tables_[s], e, y);
}

double LevelStack::level_inclusion_rate(uint32_t s) const {
    uint64_t m = num_pairs(n_);
    if (s == 0) return 1.0;
    uint64_t count = 0;
    for (EdgeId e = 0; e < m; ++e)
        if (edge_level(e) >= s) ++count;
    return static_cast<double>(count) / static_cast<double>(m);
}

void LevelStack::merge(const LevelStack& other) {
    if (other.n_ != n_ || other.seed_ != seed_ || other.gamma_ != gamma_ ||
        other.epsilon_ != epsilon_ || other.levels() != levels())
        throw std::invalid_argument("LevelStack::merge: incompatible stacks");
    for (uint32_t s = 0; s < levels(); ++s) edge_sketches_[s].merge(other.edge_sketches_[s]);
}

bool LevelStack::table_equal(const LevelStack& other) const {
    if (other.n_ != n_ || other.seed_ != seed_ || other.gamma_ != gamma_ ||
        other.levels() != levels())
        return false;
    for (uint32_t s = 0; s < levels(); ++s)
        if (!edge_sketches_[s].table_equal(other.edge_sketches_[s])) return false;
    return true;
}

uint64_t LevelStack::allocated_bytes() const {
    uint64_t total = 0;
    for (const auto& sk : edge_sketches_) total += sk.allocated_bytes();
    for (const auto& tb : identity_tables_) total += tb.allocated_bytes();
    return total;
}

uint64_t LevelStack::dense_bytes() const {
    uint64_t total = 0;
    for (const auto& sk : edge_sketches_) total += sk.dense_bytes();
    return total;
}

void LevelStack::serialize(std::ostream& out) const {
    put(out, kMagic);
    put(out, kVersion);
    put(out, n_);
    put(out, epsilon_);
    put(out, gamma_);
    put(out, seed_);
    put(out, consts_.c1);
    put(out, consts_.c2);
    put(out, consts_.cw);
    put(out, consts_.cd);
    auto S = static_cast<uint32_t>(edge_sketches_.size());
    put(out, S);
    for (const auto& sk : edge_sketches_) sk.serialize(out);
}

LevelStack LevelStack::deserialize(std::istream& in) {
    if (get<uint32_t>(in) != kMagic) throw std::runtime_error("LevelStack: bad magic");
    if (get<uint32_t>(in) != kVersion) throw std::runtime_error("LevelStack: bad version");
    LevelStack st;
    st.n_ = get<uint32_t>(in);
    st.epsilon_ = get<double>(in);
    st.gamma_ = get<double>(in);
    st.seed_ = get<uint64_t>(in);
    st.consts_.c1 = get<double>(in);
    st.consts_.c2 = get<double>(in);
    st.consts_.cw = get<double>(in);
    st.consts_.cd = get<double>(in);
    auto S = get<uint32_t>(in);
    LevelStack fresh(st.n_, st.epsilon_, st.gamma_, st.seed_, st.consts_);
    if (fresh.levels() != S) throw std::runtime_error("LevelStack: level count mismatch");
    fresh.edge_sketches_.clear();
    for (uint32_t s = 0; s < S; ++s) fresh.edge_sketches_.push_back(HHSketch::deserialize(in));
    return fresh;
}

} // namespace sparsify
