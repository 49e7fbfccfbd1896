#ifndef SPARSIFY_SDD_SOLVE_HPP
#define SPARSIFY_SDD_SOLVE_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sparsify/graph_core.hpp"

namespace sparsify {

struct SolveConfig {
    double rel_tol = 1e-8;
    uint32_t max_iters = 0; // 0 -> 10 * n

    uint32_t iters_for(uint32_t n) const { return max_iters ? max_iters : 10 * n; }
};

struct SolverFailure : std::runtime_error {
    explicit SolverFailure(double res)
        : std::runtime_error("CG failed to converge, residual " + std::to_string(res)),
          residual(res) {}
    double residual;
};

// Sparse SDD operator K~ = sum_e w_e b_e b_e^T + gamma I kept as a weighted
// edge list. Immutable after construction; solves are thread-safe.
class CoarseOperator {
public:
    struct WeightedEdge {
        EdgeId e;
        double w;
    };

    CoarseOperator(uint32_t n, std::vector<WeightedEdge> edges, double gamma);

    uint32_t n() const { return n_; }
    double gamma() const { return gamma_; }
    const std::vector<WeightedEdge>& edges() const { return edges_; }

    // y = sum_e w_e <b_e, x> b_e + gamma x, matrix-free.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    // Scaled copy (weights and gamma jointly).
    CoarseOperator scaled(double factor) const;

    Eigen::MatrixXd dense() const;

    // Connected-component label per vertex (edges of this operator only);
    // used for kernel projection when gamma = 0.
    const std::vector<uint32_t>& components() const { return comp_; }

    // Text form: `gamma <g>` header then `u v w` lines.
    void serialize(std::ostream& out) const;

private:
    uint32_t n_;
    double gamma_;
    std::vector<WeightedEdge> edges_;
    // CSR adjacency for apply
    std::vector<uint32_t> adj_off_;
    std::vector<uint32_t> adj_v_;
    std::vector<double> adj_w_;
    std::vector<double> diag_;
    std::vector<uint32_t> comp_;
};

// Approximate pseudoinverse application: returns y with
// ||K~ y - b|| <= rel_tol ||b|| (b projected onto range first when
// gamma = 0), y orthogonal to the kernel. Jacobi-preconditioned CG.
Eigen::VectorXd solve_pinv(const CoarseOperator& op, const Eigen::VectorXd& b,
                           const SolveConfig& cfg = {});

// tau~ = <b_row, K~^+ b_row> for an edge row (id < C(n,2)) or an identity
// row (id = C(n,2)+v, b = 1_v). Negative noise clamps to 0; values above
// 1/c clamp to 1/c.
double approx_leverage(const CoarseOperator& op, EdgeId row_id,
                       const SolveConfig& cfg = {}, double c = 1.0);

} // namespace sparsify

#endif
