#include "sparsify/refine.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace sparsify {

void Sparsifier::serialize(std::ostream& out) const {
    out << n << " " << gamma << "\n";
    for (const auto& we : edges) {
        auto [u, v] = edge_pair(we.e, n);
        out << u << " " << v << " " << we.w << "\n";
    }
}

Sparsifier Sparsifier::deserialize(std::istream& in) {
    Sparsifier sp;
    if (!(in >> sp.n >> sp.gamma)) throw std::runtime_error("Sparsifier: bad header");
    uint32_t u, v;
    double w;
    while (in >> u >> v >> w) sp.edges.push_back({edge_index(u, v, sp.n), w});
    return sp;
}

namespace {

SampleDecision decide_edge(EdgeId e, const LevelStack& stack, const CoarseOperator& coarse,
                           double epsilon, double c, const PipelineConstants& consts) {
    SampleDecision d;
    d.e = e;
    uint32_t n = stack.n();
    auto [u, v] = edge_pair(e, n);

    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b[u] = 1.0;
    b[v] = -1.0;
    Eigen::VectorXd y = solve_pinv(coarse, b, consts.solver);
    double tau = b.dot(y);
    if (tau <= 0.0) {
        // a zero-leverage row is a zero row
        d.level = 0xffffffffu;
        return d;
    }
    d.tau = std::min(tau, 1.0 / c);
    d.p = sampling_probability(d.tau, epsilon, n, consts);
    d.level = level_for_probability(d.p);
    if (d.level >= stack.levels()) {
        // deeper samplings are empty with high probability; treat as such
        d.level = 0xffffffffu;
        return d;
    }
    d.estimate = stack.edge_presence_value(e, y, d.level);
    d.recovered = d.estimate > d.tau / 2.0;
    return d;
}

} // namespace

Sparsifier refine_sparsifier(const LevelStack& stack, const CoarseOperator& coarse,
                             double gamma, double epsilon, double c,
                             const PipelineConstants& consts, Execution exec,
                             std::vector<SampleDecision>* decisions) {
    if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("refine: epsilon out of (0,1)");
    if (c <= 0.0 || c > 1.0) throw std::invalid_argument("refine: c out of (0,1]");
    if (coarse.n() != stack.n()) throw std::invalid_argument("refine: dimension mismatch");

    uint32_t n = stack.n();
    auto m = static_cast<int64_t>(num_pairs(n));
    std::vector<SampleDecision> all(static_cast<size_t>(m));

    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (int64_t e = 0; e < m; ++e)
            all[static_cast<size_t>(e)] =
                decide_edge(static_cast<EdgeId>(e), stack, coarse, epsilon, c, consts);
    } else {
        for (int64_t e = 0; e < m; ++e)
            all[static_cast<size_t>(e)] =
                decide_edge(static_cast<EdgeId>(e), stack, coarse, epsilon, c, consts);
    }

    Sparsifier out;
    out.n = n;
    out.gamma = gamma;
    for (const auto& d : all)
        if (d.recovered) out.edges.push_back({d.e, std::ldexp(1.0, static_cast<int>(d.level))});
    if (decisions) *decisions = std::move(all);
    return out;
}

MarginalReport sampling_marginals_test(uint32_t trials, const EdgeMultiplicitySet& graph,
                                       double epsilon, uint64_t seed0,
                                       const PipelineConstants& consts) {
    uint32_t n = graph.n();
    Eigen::MatrixXd K = exact_laplacian(graph);
    std::vector<CoarseOperator::WeightedEdge> exact;
    for (const auto& [e, mult] : graph.edges())
        if (mult) exact.push_back({e, static_cast<double>(mult)});
    CoarseOperator coarse(n, exact, 0.0);

    MarginalReport rep;
    for (const auto& [e, mult] : graph.edges())
        if (mult) rep.edges.push_back(e);
    std::vector<uint32_t> hits(rep.edges.size(), 0);

    std::vector<EdgeUpdate> stream;
    for (EdgeId e : rep.edges) {
        auto [u, v] = edge_pair(e, n);
        stream.push_back({StreamOp::Insert, u, v, 1});
    }

    std::vector<SampleDecision> dec;
    for (uint32_t t = 0; t < trials; ++t) {
        LevelStack stack(n, epsilon, 0.0, seed0 + t, consts);
        stack.ingest(stream);
        refine_sparsifier(stack, coarse, 0.0, epsilon, 1.0, consts, Execution::Parallel, &dec);
        for (size_t i = 0; i < rep.edges.size(); ++i)
            if (dec[rep.edges[i]].recovered) ++hits[i];
    }
    for (size_t i = 0; i < rep.edges.size(); ++i) {
        rep.frequency.push_back(static_cast<double>(hits[i]) / trials);
        uint32_t lvl = dec[rep.edges[i]].level;
        rep.level.push_back(lvl);
        rep.expected.push_back(lvl == 0xffffffffu ? 0.0 : std::ldexp(1.0, -static_cast<int>(lvl)));
    }
    return rep;
}

} // namespace sparsify
