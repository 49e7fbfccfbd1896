#ifndef SPARSIFY_GRAPH_CORE_HPP
#define SPARSIFY_GRAPH_CORE_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sparsify {

using EdgeId = uint64_t;
using Vertex = uint32_t;

// Number of vertex pairs, C(n,2).
inline uint64_t num_pairs(uint32_t n) {
    return static_cast<uint64_t>(n) * (n - 1) / 2;
}

// Row-major rank of the unordered pair (u,v), u < v:
//   index(u,v) = u*n - u(u+1)/2 + (v - u - 1).
// Fixes the row ordering of the complete-graph incidence matrix.
EdgeId edge_index(Vertex u, Vertex v, uint32_t n);

// Inverse of edge_index.
std::pair<Vertex, Vertex> edge_pair(EdgeId e, uint32_t n);

// Incidence row b_e: +1 at u, -1 at v, u < v.
struct IncidenceRow {
    Vertex u;
    Vertex v;
};

IncidenceRow incidence_row(EdgeId e, uint32_t n);

enum class StreamOp { Insert, Delete };

// One stream token. weight is 1 in unweighted mode; in weighted mode a
// deletion carries the weight being removed.
struct EdgeUpdate {
    StreamOp op;
    Vertex u;
    Vertex v;
    uint64_t weight = 1;
};

// Ground-truth edge multiset, maintained only by test harnesses and the
// verification path, never by the streaming path.
class EdgeMultiplicitySet {
public:
    explicit EdgeMultiplicitySet(uint32_t n) : n_(n) {}

    // Applies an update; throws on negative multiplicity or (unweighted
    // mode) duplicate insertion.
    void apply(const EdgeUpdate& upd, bool weighted = false);

    uint64_t multiplicity(EdgeId e) const;
    const std::map<EdgeId, uint64_t>& edges() const { return mult_; }
    uint32_t n() const { return n_; }
    uint64_t edge_count() const { return mult_.size(); }

private:
    uint32_t n_;
    std::map<EdgeId, uint64_t> mult_;
};

// K = sum_e mult(e) * b_e b_e^T. Dense, test-scale only.
Eigen::MatrixXd exact_laplacian(const EdgeMultiplicitySet& edges);

// Spectral certification of (1-eps) K <= K~ <= (1+eps) K on range(K).
struct CertifyResult {
    enum class Status { Pass, EigenvalueViolation, KernelViolation };
    Status status = Status::Pass;
    // Extremal eigenvalues of the pencil restricted to range(K).
    double min_eig = 1.0;
    double max_eig = 1.0;
    // Witness direction for the extremal violation (empty on pass).
    Eigen::VectorXd witness;

    bool pass() const { return status == Status::Pass; }
};

// Computes all eigenvalues of P K^{+/2} K~ K^{+/2} P with P the projector
// onto range(K); pass iff every eigenvalue lies in [1-eps, 1+eps].
// Eigenvalues below 1e-9 * lambda_max of K are treated as kernel.
CertifyResult spectral_certify(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Kt, double eps);

// Stream text format: one token per line, `+ u v` / `- u v`, or with a
// trailing positive integer weight in weighted mode. `#` lines ignored.
struct StreamParseError {
    size_t line;
    std::string message;
};

std::vector<EdgeUpdate> parse_stream(std::istream& in, bool weighted = false);
std::vector<EdgeUpdate> parse_stream_file(const std::string& path, bool weighted = false);

} // namespace sparsify

#endif
