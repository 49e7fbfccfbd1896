#ifndef SPARSIFY_HH_SKETCH_HPP
#define SPARSIFY_HH_SKETCH_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace sparsify {

// Entry of a sparse row vector fed into the sketch.
struct RowEntry {
    uint32_t pos;
    double val;
};

struct HHParams {
    uint64_t N = 0;      // index-space size
    double eta = 0.0;    // additive-error parameter, error <= eta * ||x||_2
    uint32_t rows = 0;   // d hash repetitions (median amplification)
    uint32_t buckets = 0;// w buckets per repetition
    uint64_t seed = 0;

    bool operator==(const HHParams&) const = default;
};

// Sizes rows/buckets from the configured constants: w >= cw / eta^2,
// d >= cd * log2(N).
HHParams hh_params_for(uint64_t N, double eta, uint64_t seed,
                       double cw = 32.0, double cd = 8.0);

// Hash functions shared by the sketch and its side tables.
uint32_t hh_bucket_of(const HHParams& p, uint32_t r, uint64_t i);
double hh_sign_of(const HHParams& p, uint32_t r, uint64_t i);

// Immutable side table for deterministic 1-sparse rows (the sqrt(gamma) e_v
// identity block). Stores (bucket, pos, signed value) sorted by bucket per
// hash row: O(#rows * d) ints instead of O(buckets * dim) floats, which is
// the difference between megabytes and terabytes at n = 1000.
class UnitRowTable {
public:
    struct Entry {
        uint32_t bucket;
        uint32_t pos;
        float val; // value times the row's sign hash
    };

    UnitRowTable() = default;
    UnitRowTable(const HHParams& params, uint32_t dim,
                 std::span<const std::pair<uint64_t, RowEntry>> unit_rows);

    const HHParams& params() const { return params_; }
    bool empty() const { return count_ == 0; }

    // <contribution of these rows to bucket (r, b), y>
    double bucket_dot(uint32_t r, uint32_t b, const Eigen::VectorXd& y) const;
    std::span<const Entry> row_entries(uint32_t r) const;
    uint64_t allocated_bytes() const;

private:
    HHParams params_;
    uint64_t count_ = 0;
    std::vector<std::vector<Entry>> per_row_;
};

// Bucketed sign-hash linear sketch of a matrix whose rows live in R^dim.
// Accumulator (r, h_r(i)) holds sum over colliding indices i of
// sigma_r(i) * row_i; buckets are materialized on first touch, an untouched
// bucket is an exact zero vector. Point queries happen after
// right-multiplication by a dense vector y, so the sketched matrix never has
// to be materialized.
class HHSketch {
public:
    HHSketch() = default;
    // Throws on invalid params or when the dense-equivalent table size
    // rows * buckets * dim * 8 bytes exceeds mem_cap_bytes.
    HHSketch(const HHParams& params, uint32_t dim,
             uint64_t mem_cap_bytes = kDefaultMemCap);

    static constexpr uint64_t kDefaultMemCap = 1ull << 44;

    const HHParams& params() const { return params_; }
    uint32_t dim() const { return dim_; }

    uint32_t bucket_of(uint32_t r, uint64_t i) const;
    double sign_of(uint32_t r, uint64_t i) const;

    // accumulator(r, h_r(i)) += sign * sigma_r(i) * row, for every r.
    void update(uint64_t i, std::span<const RowEntry> row, double sign);

    // median over r of sigma_r(i) * <accumulator(r, h_r(i)), y>.
    double point_query(uint64_t i, const Eigen::VectorXd& y) const;

    // Same, but each per-row term also adds the matching bucket of `extra`
    // (deterministic identity rows kept out of the mergeable table).
    double point_query_with(const UnitRowTable& extra, uint64_t i, const Eigen::VectorXd& y) const;

    // median over r of sum_b <accumulator(r,b), y>^2; unbiased per-row
    // estimate of ||X y||_2^2 for sketched matrix X.
    double estimate_sq_norm(const Eigen::VectorXd& y) const;
    double estimate_sq_norm_with(const UnitRowTable& extra, const Eigen::VectorXd& y) const;

    void merge(const HHSketch& other);

    // Bit-exact logical table equality (absent buckets count as zero).
    bool table_equal(const HHSketch& other) const;

    // Bytes actually held by materialized accumulators.
    uint64_t allocated_bytes() const;
    // Dense-equivalent table footprint rows * buckets * dim * 8.
    uint64_t dense_bytes() const;

    // Binary format: header (magic, version, params, dim) followed by the
    // dense row-major table as little-endian 64-bit floats.
    void serialize(std::ostream& out) const;
    static HHSketch deserialize(std::istream& in);

    // Accumulator entry of one bucket; buckets are kept as sparse sorted
    // vectors because a bucket typically holds far fewer nonzero coordinates
    // than dim (a dense R^dim accumulator per touched bucket is what blows
    // the single-machine budget at n = 1000).
    struct BucketEntry {
        uint32_t pos;
        float val;

        bool operator==(const BucketEntry&) const = default;
    };
    using Bucket = std::vector<BucketEntry>;

private:
    HHParams params_;
    uint32_t dim_ = 0;
    // one bucket map per repetition row
    std::vector<std::unordered_map<uint32_t, Bucket>> table_;

    const Bucket* find_bucket(uint32_t r, uint32_t b) const;
};

} // namespace sparsify

#endif
