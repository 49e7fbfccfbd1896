#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sparsify/hh_sketch.hpp"

using namespace sparsify;

namespace {

void add_scalar(HHSketch& sk, uint64_t i, double val, double sign = 1.0) {
    RowEntry ent{0, val};
    sk.update(i, std::span<const RowEntry>(&ent, 1), sign);
}

Eigen::VectorXd ones1() { return Eigen::VectorXd::Ones(1); }

} // namespace

TEST_CASE("hh_params_for sizing") {
    HHParams p = hh_params_for(1000, 0.1, 42);
    CHECK(p.buckets >= static_cast<uint32_t>(32.0 / 0.01));
    CHECK(p.rows % 2 == 1);
    CHECK(p.rows >= static_cast<uint32_t>(8.0 * std::log2(1000.0)));
    CHECK_THROWS(hh_params_for(0, 0.1, 1));
    CHECK_THROWS(hh_params_for(10, 1.5, 1));
}

TEST_CASE("memory cap rejects oversized tables") {
    HHParams p = hh_params_for(1u << 20, 0.01, 1);
    CHECK_THROWS(HHSketch(p, 100000, /*mem_cap_bytes=*/1 << 20));
}

TEST_CASE("point query recovers a lone item exactly") {
    HHParams p = hh_params_for(100, 0.25, 7);
    HHSketch sk(p, 1);
    add_scalar(sk, 42, 3.25);
    CHECK(sk.point_query(42, ones1()) == doctest::Approx(3.25));
    // any untouched index decodes to 0 (no collisions with a single item in
    // most rows; median kills the rest)
    CHECK(std::abs(sk.point_query(7, ones1())) <= 3.25);
}

TEST_CASE("additive-error contract on a dense vector") {
    // |pq(i) - x_i| <= eta ||x||_2 for >= 99% of (seed, i) pairs
    const uint64_t N = 2000;
    const double eta = 0.1;
    size_t total = 0, ok = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(900 + seed);
        std::normal_distribution<double> gauss;
        std::vector<double> x(N);
        double norm_sq = 0;
        HHSketch sk(hh_params_for(N, eta, seed * 13 + 1), 1);
        for (uint64_t i = 0; i < N; ++i) {
            x[i] = gauss(rng);
            norm_sq += x[i] * x[i];
            add_scalar(sk, i, x[i]);
        }
        double bound = eta * std::sqrt(norm_sq);
        for (uint64_t i = 0; i < N; ++i) {
            ++total;
            if (std::abs(sk.point_query(i, ones1()) - x[i]) <= bound) ++ok;
        }
    }
    CHECK(static_cast<double>(ok) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("insert followed by delete cancels bit-exactly") {
    HHParams p = hh_params_for(500, 0.2, 3);
    HHSketch a(p, 4), empty(p, 4);
    RowEntry row[2] = {{1, 1.0}, {3, -1.0}};
    for (uint64_t i : {5ull, 99ull, 431ull}) a.update(i, row, 1.0);
    for (uint64_t i : {99ull, 5ull, 431ull}) a.update(i, row, -1.0);
    CHECK(a.table_equal(empty));
}

TEST_CASE("merge of split updates equals single pass") {
    HHParams p = hh_params_for(300, 0.2, 17);
    HHSketch whole(p, 3), first(p, 3), second(p, 3);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        uint64_t i = rng() % 300;
        // integer-valued entries keep the float accumulation exact
        RowEntry row[2] = {{static_cast<uint32_t>(rng() % 3), 1.0},
                           {static_cast<uint32_t>(rng() % 3), -2.0}};
        whole.update(i, row, 1.0);
        (k < 100 ? first : second).update(i, row, 1.0);
    }
    first.merge(second);
    CHECK(first.table_equal(whole));
    HHSketch other(hh_params_for(300, 0.2, 18), 3);
    CHECK_THROWS(first.merge(other)); // seed mismatch
}

TEST_CASE("serialization round trip") {
    HHParams p = hh_params_for(200, 0.3, 23);
    HHSketch sk(p, 2);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 50; ++k) {
        RowEntry row[2] = {{0, 1.5}, {1, -0.25}};
        sk.update(rng() % 200, row, (k % 3 == 0) ? -1.0 : 1.0);
    }
    std::stringstream buf;
    sk.serialize(buf);
    HHSketch back = HHSketch::deserialize(buf);
    CHECK(back.params() == sk.params());
    CHECK(back.table_equal(sk));
    Eigen::VectorXd y(2);
    y << 0.7, -1.3;
    for (uint64_t i = 0; i < 200; ++i)
        CHECK(back.point_query(i, y) == sk.point_query(i, y));
}

TEST_CASE("squared-norm estimate tracks the true norm") {
    // X has 40 rows in R^6; per-hash-row bucket energy is an unbiased
    // estimate of ||X y||^2, and the median concentrates
    const uint32_t dim = 6;
    HHParams p = hh_params_for(500, 0.05, 31);
    HHSketch sk(p, dim);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(40, dim);
    for (int i = 0; i < 40; ++i) {
        std::vector<RowEntry> row;
        for (uint32_t j = 0; j < dim; ++j) {
            X(i, j) = gauss(rng);
            row.push_back({j, X(i, j)});
        }
        sk.update(static_cast<uint64_t>(i), row, 1.0);
    }
    Eigen::VectorXd y(dim);
    for (uint32_t j = 0; j < dim; ++j) y(j) = gauss(rng);
    double truth = (X * y).squaredNorm();
    double est = sk.estimate_sq_norm(y);
    CHECK(est >= 0.5 * truth);
    CHECK(est <= 2.0 * truth);
}

TEST_CASE("UnitRowTable matches explicitly sketched unit rows") {
    HHParams p = hh_params_for(128, 0.2, 41);
    const uint32_t dim = 5;
    std::vector<std::pair<uint64_t, RowEntry>> units;
    for (uint32_t v = 0; v < dim; ++v)
        units.emplace_back(100 + v, RowEntry{v, 1.75});
    UnitRowTable side(p, dim, units);

    HHSketch reference(p, dim);
    for (const auto& [i, ent] : units)
        reference.update(i, std::span<const RowEntry>(&ent, 1), 1.0);
    HHSketch streamed(p, dim);
    RowEntry row[2] = {{0, 1.0}, {2, -1.0}};
    streamed.update(17, row, 1.0);
    reference.update(17, row, 1.0);

    Eigen::VectorXd y(dim);
    y << 1.0, -0.5, 2.0, 0.25, -1.0;
    for (uint64_t i : {17ull, 100ull, 104ull, 55ull})
        CHECK(streamed.point_query_with(side, i, y) ==
              doctest::Approx(reference.point_query(i, y)));
    CHECK(streamed.estimate_sq_norm_with(side, y) ==
          doctest::Approx(reference.estimate_sq_norm(y)));
    // memory: entries only, no dense accumulators
    CHECK(side.allocated_bytes() <= units.size() * p.rows * 16);
}
