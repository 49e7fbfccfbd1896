#include "sparsify/sdd_solve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace sparsify {

CoarseOperator::CoarseOperator(uint32_t n, std::vector<WeightedEdge> edges, double gamma)
    : n_(n), gamma_(gamma), edges_(std::move(edges)) {
    if (gamma < 0.0) throw std::invalid_argument("CoarseOperator: gamma < 0");
    std::sort(edges_.begin(), edges_.end(),
              [](const WeightedEdge& a, const WeightedEdge& b) { return a.e < b.e; });

    diag_.assign(n_, gamma_);
    std::vector<uint32_t> deg(n_, 0);
    for (const auto& we : edges_) {
        auto [u, v] = edge_pair(we.e, n_);
        ++deg[u];
        ++deg[v];
        diag_[u] += we.w;
        diag_[v] += we.w;
    }
    adj_off_.assign(n_ + 1, 0);
    for (uint32_t u = 0; u < n_; ++u) adj_off_[u + 1] = adj_off_[u] + deg[u];
    adj_v_.resize(adj_off_[n_]);
    adj_w_.resize(adj_off_[n_]);
    std::vector<uint32_t> cur(adj_off_.begin(), adj_off_.end() - 1);
    for (const auto& we : edges_) {
        auto [u, v] = edge_pair(we.e, n_);
        adj_v_[cur[u]] = v;
        adj_w_[cur[u]++] = we.w;
        adj_v_[cur[v]] = u;
        adj_w_[cur[v]++] = we.w;
    }

    // union-find for components
    std::vector<uint32_t> parent(n_);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& we : edges_) {
        auto [u, v] = edge_pair(we.e, n_);
        parent[find(u)] = find(v);
    }
    comp_.resize(n_);
    for (uint32_t v = 0; v < n_; ++v) comp_[v] = find(v);
}

Eigen::VectorXd CoarseOperator::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(n_);
    for (uint32_t u = 0; u < n_; ++u) {
        double acc = diag_[u] * x[u];
        for (uint32_t k = adj_off_[u]; k < adj_off_[u + 1]; ++k)
            acc -= adj_w_[k] * x[adj_v_[k]];
        y[u] = acc;
    }
    return y;
}

CoarseOperator CoarseOperator::scaled(double factor) const {
    std::vector<WeightedEdge> e = edges_;
    for (auto& we : e) we.w *= factor;
    return CoarseOperator(n_, std::move(e), gamma_ * factor);
}

Eigen::MatrixXd CoarseOperator::dense() const {
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n_, n_) * gamma_;
    for (const auto& we : edges_) {
        auto [u, v] = edge_pair(we.e, n_);
        K(u, u) += we.w;
        K(v, v) += we.w;
        K(u, v) -= we.w;
        K(v, u) -= we.w;
    }
    return K;
}

void CoarseOperator::serialize(std::ostream& out) const {
    out << "gamma " << gamma_ << "\n";
    for (const auto& we : edges_) {
        auto [u, v] = edge_pair(we.e, n_);
        out << u << " " << v << " " << we.w << "\n";
    }
}

namespace {

// Subtract the per-component mean so the vector is orthogonal to every
// per-component constant vector.
void project_out_kernel(const CoarseOperator& op, Eigen::VectorXd& x) {
    const auto& comp = op.components();
    uint32_t n = op.n();
    std::vector<double> sum(n, 0.0);
    std::vector<uint32_t> cnt(n, 0);
    for (uint32_t v = 0; v < n; ++v) {
        sum[comp[v]] += x[v];
        ++cnt[comp[v]];
    }
    for (uint32_t v = 0; v < n; ++v) x[v] -= sum[comp[v]] / cnt[comp[v]];
}

} // namespace

Eigen::VectorXd solve_pinv(const CoarseOperator& op, const Eigen::VectorXd& b,
                           const SolveConfig& cfg) {
    if (b.size() != static_cast<Eigen::Index>(op.n()))
        throw std::invalid_argument("solve_pinv: dimension mismatch");
    const bool singular = op.gamma() == 0.0;
    Eigen::VectorXd rhs = b;
    if (singular) project_out_kernel(op, rhs);
    double bnorm = rhs.norm();
    uint32_t n = op.n();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (bnorm == 0.0) return x;

    // Jacobi preconditioner; an isolated vertex with gamma = 0 has a zero
    // diagonal and a trivially zero solution component.
    Eigen::VectorXd inv_diag(n);
    {
        Eigen::VectorXd d = Eigen::VectorXd::Constant(n, op.gamma());
        for (const auto& we : op.edges()) {
            auto [u, v] = edge_pair(we.e, n);
            d[u] += we.w;
            d[v] += we.w;
        }
        for (uint32_t v = 0; v < n; ++v) inv_diag[v] = d[v] > 0.0 ? 1.0 / d[v] : 1.0;
    }

    Eigen::VectorXd r = rhs; // x = 0
    Eigen::VectorXd z = inv_diag.asDiagonal() * r;
    if (singular) project_out_kernel(op, z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    double tol = cfg.rel_tol * bnorm;
    uint32_t max_iters = cfg.iters_for(n);
    double rnorm = r.norm();
    for (uint32_t it = 0; it < max_iters && rnorm > tol; ++it) {
        Eigen::VectorXd Ap = op.apply(p);
        double pAp = p.dot(Ap);
        if (pAp <= 0.0) break;
        double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        rnorm = r.norm();
        if (rnorm <= tol) break;
        z = inv_diag.asDiagonal() * r;
        if (singular) project_out_kernel(op, z);
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    if (rnorm > tol) throw SolverFailure(rnorm / bnorm);
    if (singular) project_out_kernel(op, x);
    return x;
}

double approx_leverage(const CoarseOperator& op, EdgeId row_id, const SolveConfig& cfg, double c) {
    if (c <= 0.0 || c > 1.0) throw std::invalid_argument("approx_leverage: c out of range");
    uint64_t m = num_pairs(op.n());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(op.n());
    if (row_id < m) {
        auto [u, v] = edge_pair(row_id, op.n());
        b[u] = 1.0;
        b[v] = -1.0;
    } else if (row_id < m + op.n()) {
        b[static_cast<Eigen::Index>(row_id - m)] = 1.0;
    } else {
        throw std::invalid_argument("approx_leverage: row id out of range");
    }
    Eigen::VectorXd rhs = b;
    if (op.gamma() == 0.0) project_out_kernel(op, rhs);
    Eigen::VectorXd y = solve_pinv(op, b, cfg);
    double tau = rhs.dot(y);
    if (tau < 0.0) return 0.0;
    return std::min(tau, 1.0 / c);
}

} // namespace sparsify
