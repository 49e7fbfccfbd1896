#include <doctest.h>

#include <random>

#include "sparsify/sdd_solve.hpp"
#include "test_util.hpp"

using namespace sparsify;
using testutil::to_set;

namespace {

CoarseOperator op_of(uint32_t n, const std::vector<EdgeUpdate>& stream, double gamma) {
    std::vector<CoarseOperator::WeightedEdge> e;
    for (const auto& upd : stream) e.push_back({edge_index(upd.u, upd.v, n), 1.0});
    return CoarseOperator(n, std::move(e), gamma);
}

// dense pseudoinverse leverage oracle
double exact_leverage(const Eigen::MatrixXd& K, uint32_t u, uint32_t v) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(K.rows());
    b(u) = 1.0;
    b(v) = -1.0;
    return b.dot(K.completeOrthogonalDecomposition().pseudoInverse() * b);
}

} // namespace

TEST_CASE("apply matches the dense Laplacian") {
    auto stream = testutil::random_connected_graph(12, 0.3, 3);
    CoarseOperator op = op_of(12, stream, 0.75);
    Eigen::MatrixXd K = op.dense();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd x(12);
        for (int i = 0; i < 12; ++i) x(i) = gauss(rng);
        CHECK((op.apply(x) - K * x).norm() <= 1e-12 * x.norm() * K.norm());
    }
}

TEST_CASE("solve_pinv solves within tolerance and stays range-orthogonal") {
    auto stream = testutil::random_connected_graph(20, 0.25, 9);
    CoarseOperator op = op_of(20, stream, 0.0);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(20);
    b(2) = 1.0;
    b(15) = -1.0;
    Eigen::VectorXd y = solve_pinv(op, b);
    CHECK((op.apply(y) - b).norm() <= 1e-6 * b.norm());
    CHECK(std::abs(y.sum()) <= 1e-8 * y.norm()); // orthogonal to the all-ones kernel
}

TEST_CASE("solve_pinv handles disconnected components") {
    // two components {0,1,2} and {3,4}; isolated-free but singular
    std::vector<EdgeUpdate> stream = {{StreamOp::Insert, 0, 1, 1},
                                      {StreamOp::Insert, 1, 2, 1},
                                      {StreamOp::Insert, 3, 4, 1}};
    CoarseOperator op = op_of(5, stream, 0.0);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
    b(3) = 1.0;
    b(4) = -1.0;
    Eigen::VectorXd y = solve_pinv(op, b);
    CHECK((op.apply(y) - b).norm() <= 1e-6);
    double tau = approx_leverage(op, edge_index(3, 4, 5));
    CHECK(tau == doctest::Approx(1.0)); // bridge edge of its component
}

TEST_CASE("complete-graph leverage is 2/n") {
    for (uint32_t n : {10u, 25u}) {
        CoarseOperator op = op_of(n, testutil::complete_graph(n), 0.0);
        CHECK(approx_leverage(op, edge_index(0, 1, n)) == doctest::Approx(2.0 / n).epsilon(1e-6));
        CHECK(approx_leverage(op, edge_index(2, n - 1, n)) ==
              doctest::Approx(2.0 / n).epsilon(1e-6));
    }
}

TEST_CASE("large gamma shrinks leverage to roughly 2/gamma") {
    std::vector<EdgeUpdate> one = {{StreamOp::Insert, 0, 1, 1}};
    CoarseOperator op = op_of(4, one, 1e6);
    double tau = approx_leverage(op, edge_index(0, 1, 4));
    CHECK(tau == doctest::Approx(2.0 / 1e6).epsilon(1e-3));
}

TEST_CASE("identity rows query e_v^T K^+ e_v") {
    CoarseOperator op = op_of(4, {}, 2.0); // K = 2I
    uint64_t id = num_pairs(4) + 1;
    CHECK(approx_leverage(op, id) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS(approx_leverage(op, num_pairs(4) + 4));
}

TEST_CASE("leverage clamps to 1/c and floors at 0") {
    std::vector<EdgeUpdate> one = {{StreamOp::Insert, 0, 1, 1}};
    CoarseOperator tiny = op_of(3, one, 0.0).scaled(0.25);
    // exact value is 1/0.25 = 4; with c = 0.5 it clamps to 2
    CHECK(approx_leverage(tiny, edge_index(0, 1, 3), {}, 0.5) == doctest::Approx(2.0));
    CHECK_THROWS(approx_leverage(tiny, 0, {}, 0.0));
}

TEST_CASE("scaled coarse operator scales leverages inversely") {
    auto stream = testutil::random_connected_graph(15, 0.3, 21);
    CoarseOperator op = op_of(15, stream, 0.0);
    CoarseOperator half = op.scaled(0.5);
    Eigen::MatrixXd K = op.dense();
    for (const auto& upd : stream) {
        double tau = exact_leverage(K, upd.u, upd.v);
        EdgeId e = edge_index(upd.u, upd.v, 15);
        CHECK(approx_leverage(op, e) == doctest::Approx(tau).epsilon(1e-5));
        // c = 0.5 raises the clamp to 2 so doubled leverages above 1 survive
        CHECK(approx_leverage(half, e, {}, 0.5) == doctest::Approx(2.0 * tau).epsilon(1e-5));
    }
}

TEST_CASE("coarse underestimate never underestimates leverage") {
    // K~ = cK with c in (0,1]: tau~ = tau/c >= tau, and tau~ <= tau/c
    auto stream = testutil::random_connected_graph(25, 0.2, 33);
    CoarseOperator op = op_of(25, stream, 0.0);
    Eigen::MatrixXd K = op.dense();
    std::mt19937_64 rng(8);
    for (int t = 0; t < 8; ++t) {
        double c = 0.5 + 0.5 * (static_cast<double>(rng() % 1000) / 1000.0);
        CoarseOperator coarse = op.scaled(c);
        const auto& upd = stream[rng() % stream.size()];
        double tau = exact_leverage(K, upd.u, upd.v);
        double tau_t = approx_leverage(coarse, edge_index(upd.u, upd.v, 25), {}, c);
        CHECK(tau_t >= tau - 1e-6);
        CHECK(tau_t <= tau / c + 1e-6);
    }
}

TEST_CASE("PSD fact |K_ij| <= (K_ii + K_jj) / 2") {
    std::mt19937_64 rng(55);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 10; ++t) {
        Eigen::MatrixXd A(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) A(i, j) = gauss(rng);
        Eigen::MatrixXd K = A * A.transpose();
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                CHECK(std::abs(K(i, j)) <= (K(i, i) + K(j, j)) / 2.0 + 1e-12);
    }
}

TEST_CASE("non-convergence raises SolverFailure") {
    auto stream = testutil::random_connected_graph(30, 0.2, 2);
    CoarseOperator op = op_of(30, stream, 0.0);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(30);
    b(0) = 1.0;
    b(29) = -1.0;
    SolveConfig strict;
    strict.rel_tol = 1e-14;
    strict.max_iters = 1;
    CHECK_THROWS_AS(solve_pinv(op, b, strict), SolverFailure);
}
