#include "sparsify/chain.hpp"

#include <cmath>
#include <stdexcept>

#include "sparsify/prf.hpp"

namespace sparsify {

double ChainSchedule::gamma(uint32_t level) const {
    if (level > depth) throw std::invalid_argument("ChainSchedule: level out of range");
    return lambda_u / std::ldexp(1.0, static_cast<int>(level));
}

std::vector<double> ChainSchedule::stack_gammas() const {
    std::vector<double> g;
    for (uint32_t l = 0; l <= depth; ++l) g.push_back(gamma(l));
    g.push_back(0.0);
    return g;
}

ChainSchedule build_schedule(uint32_t n) {
    if (n < 2) throw std::invalid_argument("build_schedule: n < 2");
    double nd = n;
    return build_schedule(2.0 * nd, 8.0 / (nd * nd));
}

ChainSchedule build_schedule(double lambda_u, double lambda_l) {
    if (lambda_u <= 0.0 || lambda_l <= 0.0 || lambda_u < lambda_l)
        throw std::invalid_argument("build_schedule: need lambda_u >= lambda_l > 0");
    ChainSchedule s;
    s.lambda_u = lambda_u;
    s.lambda_l = lambda_l;
    s.depth = static_cast<uint32_t>(std::ceil(std::log2(lambda_u / lambda_l)));
    return s;
}

std::vector<LevelStack> make_chain_stacks(uint32_t n, double epsilon, uint64_t seed,
                                          const ChainSchedule& sched,
                                          const PipelineConstants& consts) {
    std::vector<LevelStack> stacks;
    auto gammas = sched.stack_gammas();
    stacks.reserve(gammas.size());
    for (size_t l = 0; l < gammas.size(); ++l)
        stacks.emplace_back(n, epsilon, gammas[l], derive_seed(seed, 0x5747ull + l), consts);
    return stacks;
}

void ingest_all(std::vector<LevelStack>& stacks, const EdgeUpdate& upd) {
    for (auto& st : stacks) st.ingest(upd);
}

void ingest_all(std::vector<LevelStack>& stacks, const std::vector<EdgeUpdate>& stream) {
    for (const auto& upd : stream) ingest_all(stacks, upd);
}

Sparsifier recover_sparsifier(const std::vector<LevelStack>& stacks, double epsilon,
                              const ChainSchedule& sched, const PipelineConstants& consts,
                              std::vector<Sparsifier>* intermediates) {
    uint32_t d = sched.depth;
    if (stacks.size() != static_cast<size_t>(d) + 2)
        throw std::invalid_argument("recover_sparsifier: expected d+2 stacks");
    uint32_t n = stacks[0].n();
    double shrink = 1.0 / (2.0 * (1.0 + epsilon));
    double c_inductive = (1.0 - epsilon) * shrink;

    if (intermediates) intermediates->clear();

    // base: coarse = gamma(0) I, c = 1/2
    CoarseOperator coarse(n, {}, sched.gamma(0));
    Sparsifier current =
        refine_sparsifier(stacks[0], coarse, sched.gamma(0), epsilon, 0.5, consts);
    if (intermediates) intermediates->push_back(current);

    for (uint32_t l = 1; l <= d; ++l) {
        CoarseOperator scaled = current.to_operator().scaled(shrink);
        current = refine_sparsifier(stacks[l], scaled, sched.gamma(l), epsilon, c_inductive, consts);
        if (intermediates) intermediates->push_back(current);
    }

    CoarseOperator scaled = current.to_operator().scaled(shrink);
    Sparsifier fin =
        refine_sparsifier(stacks[d + 1], scaled, 0.0, epsilon, c_inductive, consts);
    if (intermediates) intermediates->push_back(fin);
    return fin;
}

namespace {

// C <= D on range(P): max eigenvalue of restricted pencil <= 1.
bool psd_leq(const Eigen::MatrixXd& C, const Eigen::MatrixXd& D, double tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D - C);
    double scale = std::max({C.cwiseAbs().maxCoeff(), D.cwiseAbs().maxCoeff(), 1.0});
    return es.eigenvalues().minCoeff() >= -tol * scale;
}

} // namespace

ChainRelationReport verify_chain_relations(const Eigen::MatrixXd& K, const ChainSchedule& sched) {
    ChainRelationReport rep;
    auto n = K.rows();
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    rep.lambda_max = es.eigenvalues().maxCoeff();
    double kernel_tol = 1e-9 * std::max(rep.lambda_max, 1.0);
    rep.lambda_min_nonzero = 0.0;
    for (int i = 0; i < n; ++i) {
        double lam = es.eigenvalues()(i);
        if (lam > kernel_tol) {
            rep.lambda_min_nonzero = lam;
            break;
        }
    }

    // relation 1 restricted to range(K): for eigenpairs with lambda > 0,
    // lambda <= lambda + gamma(d) <= 2 lambda.
    rep.relation1 = true;
    for (int i = 0; i < n; ++i) {
        double lam = es.eigenvalues()(i);
        if (lam <= kernel_tol) continue;
        double lifted = lam + sched.gamma(sched.depth);
        if (lifted < lam * (1.0 - 1e-12) || lifted > 2.0 * lam * (1.0 + 1e-12))
            rep.relation1 = false;
    }

    rep.relation2 = true;
    for (uint32_t l = 1; l <= sched.depth; ++l) {
        Eigen::MatrixXd Kl = K + sched.gamma(l) * I;
        Eigen::MatrixXd Kprev = K + sched.gamma(l - 1) * I;
        if (!psd_leq(Kl, Kprev) || !psd_leq(Kprev, 2.0 * Kl)) rep.relation2 = false;
    }

    Eigen::MatrixXd K0 = K + sched.gamma(0) * I;
    rep.relation3 = psd_leq(K0, 2.0 * sched.gamma(0) * I) && psd_leq(2.0 * sched.gamma(0) * I, 2.0 * K0);
    return rep;
}

} // namespace sparsify
