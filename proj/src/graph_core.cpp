#include "sparsify/graph_core.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sparsify {

EdgeId edge_index(Vertex u, Vertex v, uint32_t n) {
    if (u == v) throw std::invalid_argument("edge_index: self loop");
    if (u > v) std::swap(u, v);
    if (v >= n) throw std::invalid_argument("edge_index: vertex out of range");
    uint64_t uu = u;
    return uu * n - uu * (uu + 1) / 2 + (v - u - 1);
}

std::pair<Vertex, Vertex> edge_pair(EdgeId e, uint32_t n) {
    if (e >= num_pairs(n)) throw std::invalid_argument("edge_pair: id out of range");
    // Rows for fixed u occupy a contiguous block of length n-1-u; solve the
    // quadratic for the block, then correct for rounding.
    double nd = n;
    double ud = nd - 0.5 - std::sqrt((nd - 0.5) * (nd - 0.5) - 2.0 * static_cast<double>(e));
    auto u = static_cast<uint64_t>(ud);
    if (u > 0 && u * n - u * (u + 1) / 2 > e) --u;
    while ((u + 1) * n - (u + 1) * (u + 2) / 2 <= e) ++u;
    uint64_t base = u * n - u * (u + 1) / 2;
    auto v = static_cast<Vertex>(u + 1 + (e - base));
    return {static_cast<Vertex>(u), v};
}

IncidenceRow incidence_row(EdgeId e, uint32_t n) {
    auto [u, v] = edge_pair(e, n);
    return IncidenceRow{u, v};
}

void EdgeMultiplicitySet::apply(const EdgeUpdate& upd, bool weighted) {
    EdgeId e = edge_index(upd.u, upd.v, n_);
    uint64_t delta = weighted ? upd.weight : 1;
    if (upd.op == StreamOp::Insert) {
        uint64_t& m = mult_[e];
        if (!weighted && m != 0)
            throw std::runtime_error("duplicate insertion of existing edge");
        m += delta;
    } else {
        auto it = mult_.find(e);
        if (it == mult_.end() || it->second < delta)
            throw std::runtime_error("deletion drives multiplicity negative");
        it->second -= delta;
        if (it->second == 0) mult_.erase(it);
    }
}

uint64_t EdgeMultiplicitySet::multiplicity(EdgeId e) const {
    auto it = mult_.find(e);
    return it == mult_.end() ? 0 : it->second;
}

Eigen::MatrixXd exact_laplacian(const EdgeMultiplicitySet& edges) {
    uint32_t n = edges.n();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [e, m] : edges.edges()) {
        if (m == 0) continue;
        auto [u, v] = edge_pair(e, n);
        double w = static_cast<double>(m);
        K(u, u) += w;
        K(v, v) += w;
        K(u, v) -= w;
        K(v, u) -= w;
    }
    return K;
}

CertifyResult spectral_certify(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Kt, double eps) {
    if (K.rows() != K.cols() || Kt.rows() != Kt.cols() || K.rows() != Kt.rows())
        throw std::invalid_argument("spectral_certify: dimension mismatch");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const Eigen::VectorXd& lam = es.eigenvalues();
    double lmax = lam.size() ? lam.maxCoeff() : 0.0;
    double kernel_tol = 1e-9 * std::max(lmax, 1.0);

    CertifyResult res;

    // ker(K) must be contained in ker(K~).
    double kt_scale = std::max(Kt.cwiseAbs().maxCoeff(), 1.0);
    for (int i = 0; i < lam.size(); ++i) {
        if (lam(i) > kernel_tol) continue;
        Eigen::VectorXd z = es.eigenvectors().col(i);
        if ((Kt * z).norm() > 1e-7 * kt_scale) {
            res.status = CertifyResult::Status::KernelViolation;
            res.witness = z;
            return res;
        }
    }

    // Restrict the pencil to range(K): M = W^T K~ W with W = V Lambda^{-1/2}.
    std::vector<int> idx;
    for (int i = 0; i < lam.size(); ++i)
        if (lam(i) > kernel_tol) idx.push_back(i);
    if (idx.empty()) return res; // K = 0: nothing to certify

    Eigen::MatrixXd W(K.rows(), static_cast<int>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j)
        W.col(static_cast<int>(j)) = es.eigenvectors().col(idx[j]) / std::sqrt(lam(idx[j]));

    Eigen::MatrixXd M = W.transpose() * Kt * W;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(M);
    res.min_eig = esM.eigenvalues().minCoeff();
    res.max_eig = esM.eigenvalues().maxCoeff();

    const double slack = 1e-9;
    if (res.min_eig < 1.0 - eps - slack || res.max_eig > 1.0 + eps + slack) {
        res.status = CertifyResult::Status::EigenvalueViolation;
        int which;
        if (1.0 + eps - res.max_eig < res.min_eig - (1.0 - eps)) {
            for (which = 0; which < esM.eigenvalues().size(); ++which)
                if (esM.eigenvalues()(which) == res.max_eig) break;
        } else {
            for (which = 0; which < esM.eigenvalues().size(); ++which)
                if (esM.eigenvalues()(which) == res.min_eig) break;
        }
        Eigen::VectorXd x = W * esM.eigenvectors().col(which);
        res.witness = x / x.norm();
    }
    return res;
}

namespace {

[[noreturn]] void parse_fail(size_t line, const std::string& msg) {
    throw std::runtime_error("stream parse error at line " + std::to_string(line) + ": " + msg);
}

} // namespace

std::vector<EdgeUpdate> parse_stream(std::istream& in, bool weighted) {
    std::vector<EdgeUpdate> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        std::string op;
        long long u = -1, v = -1;
        long long w = 1;
        ss >> op >> u >> v;
        if (!ss || (op != "+" && op != "-")) parse_fail(lineno, "expected `+ u v` or `- u v`");
        if (weighted) {
            ss >> w;
            if (!ss || w <= 0) parse_fail(lineno, "expected positive integer weight");
        }
        std::string rest;
        if (ss >> rest) parse_fail(lineno, "trailing tokens");
        if (u < 0 || v < 0 || u == v) parse_fail(lineno, "bad vertex pair");
        EdgeUpdate upd;
        upd.op = (op == "+") ? StreamOp::Insert : StreamOp::Delete;
        upd.u = static_cast<Vertex>(std::min(u, v));
        upd.v = static_cast<Vertex>(std::max(u, v));
        upd.weight = static_cast<uint64_t>(w);
        out.push_back(upd);
    }
    return out;
}

std::vector<EdgeUpdate> parse_stream_file(const std::string& path, bool weighted) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open stream file: " + path);
    return parse_stream(f, weighted);
}

} // namespace sparsify
