#include "sparsify/hh_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "sparsify/prf.hpp"

namespace sparsify {

namespace {

constexpr uint32_t kMagic = 0x4848534bu; // "HHSK"
constexpr uint32_t kVersion = 1;

// PRF streams: even ids -> buckets, odd ids -> signs.
constexpr uint64_t kBucketStream = 2;
constexpr uint64_t kSignStream = 3;

double median_inplace(std::vector<double>& v) {
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(mid), v.end());
    return v[mid];
}

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("HHSketch: truncated input");
    return v;
}

} // namespace

HHParams hh_params_for(uint64_t N, double eta, uint64_t seed, double cw, double cd) {
    if (N == 0 || eta <= 0.0 || eta >= 1.0)
        throw std::invalid_argument("hh_params_for: need N > 0 and eta in (0,1)");
    HHParams p;
    p.N = N;
    p.eta = eta;
    p.seed = seed;
    p.buckets = static_cast<uint32_t>(std::ceil(cw / (eta * eta)));
    double lg = std::log2(static_cast<double>(std::max<uint64_t>(N, 2)));
    p.rows = static_cast<uint32_t>(std::max(1.0, std::ceil(cd * lg)));
    p.rows |= 1u; // odd row count keeps the median a single table entry
    return p;
}

uint32_t hh_bucket_of(const HHParams& p, uint32_t r, uint64_t i) {
    return static_cast<uint32_t>(prf(p.seed, kBucketStream + 4ull * r, i) % p.buckets);
}

double hh_sign_of(const HHParams& p, uint32_t r, uint64_t i) {
    return (prf(p.seed, kSignStream + 4ull * r, i) & 1u) ? 1.0 : -1.0;
}

UnitRowTable::UnitRowTable(const HHParams& params, uint32_t dim,
                           std::span<const std::pair<uint64_t, RowEntry>> unit_rows)
    : params_(params), count_(unit_rows.size()), per_row_(params.rows) {
    for (const auto& [i, ent] : unit_rows) {
        if (i >= params.N) throw std::invalid_argument("UnitRowTable: index out of range");
        if (ent.pos >= dim) throw std::invalid_argument("UnitRowTable: position out of range");
        for (uint32_t r = 0; r < params.rows; ++r)
            per_row_[r].push_back({hh_bucket_of(params, r, i), ent.pos,
                                   static_cast<float>(hh_sign_of(params, r, i) * ent.val)});
    }
    for (auto& row : per_row_) {
        std::sort(row.begin(), row.end(),
                  [](const Entry& a, const Entry& b) { return a.bucket < b.bucket; });
        row.shrink_to_fit();
    }
}

double UnitRowTable::bucket_dot(uint32_t r, uint32_t b, const Eigen::VectorXd& y) const {
    if (count_ == 0) return 0.0;
    const auto& row = per_row_[r];
    auto cmp = [](const Entry& e, uint32_t bb) { return e.bucket < bb; };
    auto it = std::lower_bound(row.begin(), row.end(), b, cmp);
    double s = 0.0;
    for (; it != row.end() && it->bucket == b; ++it)
        s += static_cast<double>(it->val) * y[it->pos];
    return s;
}

std::span<const UnitRowTable::Entry> UnitRowTable::row_entries(uint32_t r) const {
    if (count_ == 0) return {};
    return per_row_[r];
}

uint64_t UnitRowTable::allocated_bytes() const {
    uint64_t total = 0;
    for (const auto& row : per_row_) total += row.size() * sizeof(Entry);
    return total;
}

HHSketch::HHSketch(const HHParams& params, uint32_t dim, uint64_t mem_cap_bytes)
    : params_(params), dim_(dim) {
    if (params.N == 0 || params.rows == 0 || params.buckets == 0 || dim == 0)
        throw std::invalid_argument("HHSketch: invalid params");
    uint64_t dense = static_cast<uint64_t>(params.rows) * params.buckets * dim * 8;
    if (dense > mem_cap_bytes)
        throw std::runtime_error("HHSketch: table exceeds configured memory cap");
    table_.resize(params.rows);
}

uint32_t HHSketch::bucket_of(uint32_t r, uint64_t i) const { return hh_bucket_of(params_, r, i); }

double HHSketch::sign_of(uint32_t r, uint64_t i) const { return hh_sign_of(params_, r, i); }

namespace {

void bucket_add(HHSketch::Bucket& acc, uint32_t pos, float delta) {
    auto it = std::lower_bound(acc.begin(), acc.end(), pos,
                               [](const HHSketch::BucketEntry& e, uint32_t p) { return e.pos < p; });
    if (it != acc.end() && it->pos == pos)
        it->val += delta;
    else
        acc.insert(it, {pos, delta});
}

double bucket_dot(const HHSketch::Bucket* acc, const Eigen::VectorXd& y) {
    if (!acc) return 0.0;
    double s = 0.0;
    for (const auto& ent : *acc) s += static_cast<double>(ent.val) * y[ent.pos];
    return s;
}

bool bucket_zero(const HHSketch::Bucket& acc) {
    for (const auto& ent : acc)
        if (ent.val != 0.0f) return false;
    return true;
}

} // namespace

void HHSketch::update(uint64_t i, std::span<const RowEntry> row, double sign) {
    if (i >= params_.N) throw std::invalid_argument("HHSketch::update: index out of range");
    for (uint32_t r = 0; r < params_.rows; ++r) {
        uint32_t b = bucket_of(r, i);
        auto& acc = table_[r][b];
        float s = static_cast<float>(sign * sign_of(r, i));
        for (const RowEntry& ent : row) bucket_add(acc, ent.pos, s * static_cast<float>(ent.val));
    }
}

const HHSketch::Bucket* HHSketch::find_bucket(uint32_t r, uint32_t b) const {
    auto it = table_[r].find(b);
    return it == table_[r].end() ? nullptr : &it->second;
}

double HHSketch::point_query(uint64_t i, const Eigen::VectorXd& y) const {
    return point_query_with(UnitRowTable{}, i, y);
}

double HHSketch::point_query_with(const UnitRowTable& extra, uint64_t i,
                                  const Eigen::VectorXd& y) const {
    if (i >= params_.N) throw std::invalid_argument("HHSketch::point_query: index out of range");
    if (!extra.empty() && !(extra.params() == params_))
        throw std::invalid_argument("HHSketch::point_query_with: params mismatch");
    std::vector<double> est(params_.rows);
    for (uint32_t r = 0; r < params_.rows; ++r) {
        uint32_t b = bucket_of(r, i);
        double dot = bucket_dot(find_bucket(r, b), y) + extra.bucket_dot(r, b, y);
        est[r] = sign_of(r, i) * dot;
    }
    return median_inplace(est);
}

double HHSketch::estimate_sq_norm(const Eigen::VectorXd& y) const {
    return estimate_sq_norm_with(UnitRowTable{}, y);
}

double HHSketch::estimate_sq_norm_with(const UnitRowTable& extra, const Eigen::VectorXd& y) const {
    if (!extra.empty() && !(extra.params() == params_))
        throw std::invalid_argument("HHSketch::estimate_sq_norm_with: params mismatch");
    std::vector<double> est(params_.rows);
    for (uint32_t r = 0; r < params_.rows; ++r) {
        double sum = 0.0;
        for (const auto& [b, acc] : table_[r]) {
            double dot = bucket_dot(&acc, y) + extra.bucket_dot(r, b, y);
            sum += dot * dot;
        }
        // buckets holding only side-table mass
        auto entries = extra.row_entries(r);
        for (size_t k = 0; k < entries.size();) {
            uint32_t b = entries[k].bucket;
            double dot = 0.0;
            for (; k < entries.size() && entries[k].bucket == b; ++k)
                dot += static_cast<double>(entries[k].val) * y[entries[k].pos];
            if (!find_bucket(r, b)) sum += dot * dot;
        }
        est[r] = sum;
    }
    return median_inplace(est);
}

void HHSketch::merge(const HHSketch& other) {
    if (!(other.params_ == params_) || other.dim_ != dim_)
        throw std::invalid_argument("HHSketch::merge: params/seed mismatch");
    for (uint32_t r = 0; r < params_.rows; ++r) {
        for (const auto& [b, acc] : other.table_[r]) {
            auto it = table_[r].find(b);
            if (it == table_[r].end()) {
                table_[r].emplace(b, acc);
            } else {
                for (const auto& ent : acc) bucket_add(it->second, ent.pos, ent.val);
            }
        }
    }
}

namespace {

// Logical equality: identical values at identical positions, explicit zeros
// and absent entries interchangeable.
bool bucket_content_equal(const HHSketch::Bucket& a, const HHSketch::Bucket& b) {
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (i < a.size() && a[i].val == 0.0f) { ++i; continue; }
        if (j < b.size() && b[j].val == 0.0f) { ++j; continue; }
        if (i == a.size() || j == b.size()) return false;
        if (a[i] != b[j]) return false;
        ++i;
        ++j;
    }
    return true;
}

} // namespace

bool HHSketch::table_equal(const HHSketch& other) const {
    if (!(other.params_ == params_) || other.dim_ != dim_) return false;
    static const Bucket kEmpty;
    for (uint32_t r = 0; r < params_.rows; ++r) {
        for (const auto& [b, acc] : table_[r]) {
            const Bucket* o = other.find_bucket(r, b);
            if (!bucket_content_equal(acc, o ? *o : kEmpty)) return false;
        }
        for (const auto& [b, acc] : other.table_[r])
            if (!find_bucket(r, b) && !bucket_zero(acc)) return false;
    }
    return true;
}

uint64_t HHSketch::allocated_bytes() const {
    uint64_t total = 0;
    for (const auto& row : table_)
        for (const auto& [b, acc] : row)
            total += acc.capacity() * sizeof(BucketEntry) + 64; // payload + node overhead
    return total;
}

uint64_t HHSketch::dense_bytes() const {
    return static_cast<uint64_t>(params_.rows) * params_.buckets * dim_ * 8;
}

void HHSketch::serialize(std::ostream& out) const {
    put(out, kMagic);
    put(out, kVersion);
    put(out, params_.N);
    put(out, params_.eta);
    put(out, params_.rows);
    put(out, params_.buckets);
    put(out, params_.seed);
    put(out, dim_);
    std::vector<double> buf(dim_);
    for (uint32_t r = 0; r < params_.rows; ++r) {
        for (uint32_t b = 0; b < params_.buckets; ++b) {
            std::fill(buf.begin(), buf.end(), 0.0);
            if (const Bucket* acc = find_bucket(r, b))
                for (const auto& ent : *acc) buf[ent.pos] = static_cast<double>(ent.val);
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(sizeof(double) * dim_));
        }
    }
}

HHSketch HHSketch::deserialize(std::istream& in) {
    if (get<uint32_t>(in) != kMagic) throw std::runtime_error("HHSketch: bad magic");
    if (get<uint32_t>(in) != kVersion) throw std::runtime_error("HHSketch: bad version");
    HHParams p;
    p.N = get<uint64_t>(in);
    p.eta = get<double>(in);
    p.rows = get<uint32_t>(in);
    p.buckets = get<uint32_t>(in);
    p.seed = get<uint64_t>(in);
    auto dim = get<uint32_t>(in);
    HHSketch sk(p, dim);
    std::vector<double> buf(dim);
    for (uint32_t r = 0; r < p.rows; ++r) {
        for (uint32_t b = 0; b < p.buckets; ++b) {
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(sizeof(double) * dim));
            if (!in) throw std::runtime_error("HHSketch: truncated table");
            Bucket acc;
            for (uint32_t k = 0; k < dim; ++k)
                if (buf[k] != 0.0) acc.push_back({k, static_cast<float>(buf[k])});
            if (!acc.empty()) sk.table_[r].emplace(b, std::move(acc));
        }
    }
    return sk;
}

} // namespace sparsify
