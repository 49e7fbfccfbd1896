#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "sparsify/structured.hpp"
#include "test_util.hpp"

using namespace sparsify;

namespace {

Dictionary random_dict(uint32_t m, uint32_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd rows(m, n);
    for (uint32_t i = 0; i < m; ++i)
        for (uint32_t j = 0; j < n; ++j) rows(i, j) = gauss(rng);
    return Dictionary(std::move(rows));
}

// dyadic-valued dictionary: float accumulation stays exact, so bit-exact
// table comparisons are meaningful
Dictionary dyadic_dict(uint32_t m, uint32_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd rows(m, n);
    for (uint32_t i = 0; i < m; ++i)
        for (uint32_t j = 0; j < n; ++j)
            rows(i, j) = static_cast<double>(static_cast<int>(rng() % 17) - 8) / 4.0;
    return Dictionary(std::move(rows));
}

std::vector<RowUpdate> insert_all(uint32_t m) {
    std::vector<RowUpdate> s;
    for (uint32_t i = 0; i < m; ++i) s.push_back({StreamOp::Insert, i});
    return s;
}

} // namespace

TEST_CASE("Dictionary text round trip") {
    Dictionary d = random_dict(7, 3, 1);
    std::stringstream buf;
    d.serialize(buf);
    Dictionary back = Dictionary::deserialize(buf);
    CHECK(back.m() == 7);
    CHECK(back.n() == 3);
    CHECK((back.matrix() - d.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
    std::stringstream bad("3 0\n");
    CHECK_THROWS(Dictionary::deserialize(bad));
}

TEST_CASE("parse_row_stream") {
    std::istringstream in("# c\n+ 0\n+ 3\n- 0\n");
    auto ups = parse_row_stream(in);
    REQUIRE(ups.size() == 3);
    CHECK(ups[0].op == StreamOp::Insert);
    CHECK(ups[2].op == StreamOp::Delete);
    CHECK(ups[1].row == 3);
    std::istringstream bad("+ 1\n* 2\n");
    CHECK_THROWS(parse_row_stream(bad));
}

TEST_CASE("DictOperator apply/solve/dense") {
    Dictionary d = random_dict(20, 6, 2);
    std::vector<DictOperator::WeightedRow> rows;
    for (uint32_t i = 0; i < 20; i += 2) rows.push_back({i, 1.0 + 0.1 * i});
    DictOperator op(d, rows, 0.5);
    Eigen::MatrixXd K = op.dense();
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
    CHECK((op.apply(x) - K * x).norm() <= 1e-10);
    Eigen::VectorXd b = Eigen::VectorXd::Random(6);
    Eigen::VectorXd y = op.solve(b);
    CHECK((K * y - b).norm() <= 1e-6 * b.norm());
    CHECK_THROWS(DictOperator(d, {{99, 1.0}}, 0.0));
}

TEST_CASE("diagonal dictionary leverage has closed form d_i^2/(d_i^2+gamma)") {
    const uint32_t n = 6;
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> diag = {0.5, 1.0, 2.0, 3.0, 0.25, 4.0};
    for (uint32_t i = 0; i < n; ++i) rows(i, i) = diag[i];
    Dictionary d(std::move(rows));
    const double gamma = 1.5;
    std::vector<DictOperator::WeightedRow> all;
    for (uint32_t i = 0; i < n; ++i) all.push_back({i, 1.0});
    DictOperator op(d, all, gamma);
    for (uint32_t i = 0; i < n; ++i) {
        double di2 = diag[i] * diag[i];
        CHECK(op.approx_leverage(d.row(i)) ==
              doctest::Approx(di2 / (di2 + gamma)).epsilon(1e-6));
    }
}

TEST_CASE("incidence dictionary reduces to graph leverages") {
    // dictionary = incidence rows of K_5; leverage of every present row with
    // the exact operator matches the complete-graph value 2/n
    const uint32_t n = 5;
    uint64_t m = num_pairs(n);
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), n);
    for (EdgeId e = 0; e < m; ++e) {
        auto [u, v] = edge_pair(e, n);
        rows(static_cast<Eigen::Index>(e), u) = 1.0;
        rows(static_cast<Eigen::Index>(e), v) = -1.0;
    }
    Dictionary d(std::move(rows));
    std::vector<DictOperator::WeightedRow> all;
    for (uint32_t i = 0; i < m; ++i) all.push_back({i, 1.0});
    const double gamma = 1e-6; // keep the operator invertible
    DictOperator op(d, all, gamma);
    for (uint32_t i = 0; i < m; ++i)
        CHECK(op.approx_leverage(d.row(i)) == doctest::Approx(2.0 / n).epsilon(1e-4));
}

TEST_CASE("cell membership is geometric and independent across cells") {
    Dictionary d = random_dict(400, 4, 3);
    MatrixLevelStack st(d, 0.5, 64.0, 0.0, 11);
    CHECK(st.rates() == static_cast<uint32_t>(std::ceil(std::log2(64.0))) + 10);
    CHECK(st.repetitions() >= 1);
    // rate 1 keeps about half the rows, rate 2 about a quarter
    for (uint32_t t = 0; t < std::min(st.repetitions(), 2u); ++t) {
        uint32_t c1 = 0, c2 = 0;
        for (uint32_t i = 0; i < 400; ++i) {
            if (st.cell_includes_row(1, t, i)) ++c1;
            if (st.cell_includes_row(2, t, i)) ++c2;
        }
        CHECK(c1 == doctest::Approx(200).epsilon(0.25));
        CHECK(c2 == doctest::Approx(100).epsilon(0.35));
    }
    // rate 0 keeps everything
    for (uint32_t i = 0; i < 400; ++i) CHECK(st.cell_includes_row(0, 0, i));
    // distinct repetitions disagree on some rows (not nested, not copies)
    if (st.repetitions() >= 2) {
        uint32_t differ = 0;
        for (uint32_t i = 0; i < 400; ++i)
            if (st.cell_includes_row(2, 0, i) != st.cell_includes_row(2, 1, i)) ++differ;
        CHECK(differ > 50);
    }
}

TEST_CASE("ingest/delete cancellation and half-stream merge") {
    Dictionary d = dyadic_dict(30, 5, 9);
    MatrixLevelStack a(d, 0.5, 16.0, 0.0, 21), b(d, 0.5, 16.0, 0.0, 21);
    MatrixLevelStack whole(d, 0.5, 16.0, 0.0, 21);
    auto stream = insert_all(30);
    whole.ingest(stream, d);
    for (size_t i = 0; i < stream.size(); ++i) (i < 15 ? a : b).ingest(stream[i], d);
    a.merge(b);
    CHECK(a.table_equal(whole));

    for (uint32_t i = 0; i < 30; ++i) whole.ingest({StreamOp::Delete, i}, d);
    MatrixLevelStack empty(d, 0.5, 16.0, 0.0, 21);
    CHECK(whole.table_equal(empty));

    MatrixLevelStack other(d, 0.5, 16.0, 0.0, 22);
    CHECK_THROWS(a.merge(other));
}

TEST_CASE("stack serialization round trip") {
    Dictionary d = random_dict(25, 4, 5);
    MatrixLevelStack st(d, 0.5, 8.0, 2.0, 31);
    st.ingest(insert_all(25), d);
    std::stringstream buf;
    st.serialize(buf);
    MatrixLevelStack back = MatrixLevelStack::deserialize(buf, d);
    CHECK(back.table_equal(st));
    CHECK(back.gamma() == st.gamma());
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
    for (uint32_t i = 0; i < 25; ++i)
        CHECK(back.cell_point_query(0, 0, i, y) == st.cell_point_query(0, 0, i, y));
    Dictionary wrong = random_dict(10, 4, 6);
    std::stringstream buf2;
    st.serialize(buf2);
    CHECK_THROWS(MatrixLevelStack::deserialize(buf2, wrong));
}

TEST_CASE("row_sample_matrix with exact coarse keeps present heavy rows") {
    const uint32_t m = 30, n = 8;
    Dictionary d = random_dict(m, n, 12);
    MatrixLevelStack st(d, 0.5, 32.0, 0.0, 51);
    // stream a subset of rows
    std::vector<RowUpdate> stream;
    std::vector<DictOperator::WeightedRow> present;
    for (uint32_t i = 0; i < m; i += 2) {
        stream.push_back({StreamOp::Insert, i});
        present.push_back({i, 1.0});
    }
    st.ingest(stream, d);
    DictOperator exact(d, present, 0.0); // full rank w.h.p. (15 Gaussian rows in R^8)
    std::vector<RowSampleDecision> dec;
    auto kept = row_sample_matrix(st, d, exact, 0.5, 1.0, {}, &dec);
    REQUIRE(dec.size() == m);
    std::set<uint32_t> in_stream;
    for (const auto& up : stream) in_stream.insert(up.row);
    size_t correct = 0;
    for (const auto& rd : dec) {
        bool present_row = in_stream.count(rd.id) > 0;
        if (rd.rate == 0 && rd.recovered == present_row) ++correct;
        if (rd.recovered) CHECK(std::ldexp(1.0, static_cast<int>(rd.rate)) ==
                                doctest::Approx(1.0)); // tau > 1/2 here -> rate 0
    }
    // Gaussian rows with an exact coarse operator: recovery is near-perfect
    CHECK(static_cast<double>(correct) / m >= 0.9);
    CHECK(kept.size() >= present.size() * 9 / 10);
}

TEST_CASE("matrix chain end-to-end certifies at small scale") {
    const uint32_t m = 40, n = 8;
    const double eps = 0.5;
    Dictionary d = random_dict(m, n, 77);
    std::vector<DictOperator::WeightedRow> all;
    for (uint32_t i = 0; i < m; ++i) all.push_back({i, 1.0});
    Eigen::MatrixXd AtA = DictOperator(d, all, 0.0).dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(AtA);
    double lmax = es.eigenvalues().maxCoeff();
    double lmin = es.eigenvalues().minCoeff();
    double lambda_u = 2.0 * lmax;
    double kappa_u = 4.0 * lmax / lmin;

    uint32_t passes = 0;
    for (uint64_t seed = 1; seed <= 2; ++seed) {
        auto stacks = make_matrix_chain_stacks(d, eps, lambda_u, kappa_u, seed * 999);
        auto stream = insert_all(m);
        for (auto& st : stacks) st.ingest(stream, d);
        MatrixSparsifier sp = recover_matrix_sparsifier(stacks, d, eps, lambda_u, kappa_u);
        if (spectral_certify(AtA, sp.dense(d), eps).pass()) ++passes;
    }
    CHECK(passes >= 1);
}
