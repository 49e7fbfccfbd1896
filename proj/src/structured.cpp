#include "sparsify/structured.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sparsify/prf.hpp"

namespace sparsify {

namespace {

constexpr uint32_t kStackMagic = 0x4d53544bu; // "MSTK"
constexpr uint32_t kStackVersion = 1;
constexpr uint32_t kSkipped = 0xffffffffu;

// PRF stream tags local to this module. Cell membership bits are keyed by the
// stack seed; sketch contents are keyed by per-cell derived seeds, so these
// never collide with the hash streams inside HHSketch.
constexpr uint64_t kCellStreamBase = 1000;
constexpr uint64_t kCellSeedTag = 0x57ce11ull;
constexpr uint64_t kRepetitionStream = 0x7e57ull;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("MatrixLevelStack: truncated input");
    return v;
}

std::vector<RowEntry> sparse_entries(const Eigen::VectorXd& a, double scale = 1.0) {
    std::vector<RowEntry> row;
    for (int j = 0; j < a.size(); ++j)
        if (a(j) != 0.0) row.push_back({static_cast<uint32_t>(j), scale * a(j)});
    return row;
}

} // namespace

// ---------------------------------------------------------------------------
// Dictionary

void Dictionary::serialize(std::ostream& out) const {
    out << m() << ' ' << n() << '\n';
    out.precision(17);
    for (uint32_t i = 0; i < m(); ++i) {
        for (uint32_t j = 0; j < n(); ++j) out << (j ? " " : "") << rows_(i, j);
        out << '\n';
    }
}

Dictionary Dictionary::deserialize(std::istream& in) {
    uint32_t m = 0, n = 0;
    if (!(in >> m >> n) || m == 0 || n == 0)
        throw std::runtime_error("Dictionary: bad header");
    Eigen::MatrixXd rows(m, n);
    for (uint32_t i = 0; i < m; ++i)
        for (uint32_t j = 0; j < n; ++j)
            if (!(in >> rows(i, j)))
                throw std::runtime_error("Dictionary: truncated at row " + std::to_string(i));
    return Dictionary(std::move(rows));
}

Dictionary Dictionary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("Dictionary: cannot open " + path);
    return deserialize(in);
}

std::vector<RowUpdate> parse_row_stream(std::istream& in) {
    std::vector<RowUpdate> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok[0] == '#') continue;
        if (tok != "+" && tok != "-")
            throw std::runtime_error("row stream line " + std::to_string(lineno) +
                                     ": expected + or -, got '" + tok + "'");
        uint32_t id = 0;
        if (!(ls >> id))
            throw std::runtime_error("row stream line " + std::to_string(lineno) +
                                     ": missing row id");
        out.push_back({tok == "+" ? StreamOp::Insert : StreamOp::Delete, id});
    }
    return out;
}

// ---------------------------------------------------------------------------
// DictOperator

DictOperator::DictOperator(const Dictionary& dict, std::vector<WeightedRow> rows, double gamma)
    : dict_(&dict), n_(dict.n()), gamma_(gamma), rows_(std::move(rows)) {
    if (gamma_ < 0.0) throw std::invalid_argument("DictOperator: gamma < 0");
    diag_ = Eigen::VectorXd::Constant(n_, gamma_);
    for (const auto& [id, w] : rows_) {
        if (id >= dict.m()) throw std::invalid_argument("DictOperator: row id out of range");
        diag_ += w * dict.matrix().row(id).transpose().cwiseAbs2();
    }
}

Eigen::VectorXd DictOperator::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = gamma_ * x;
    for (const auto& [id, w] : rows_) {
        double dot = dict_->matrix().row(id).dot(x);
        y += (w * dot) * dict_->matrix().row(id).transpose();
    }
    return y;
}

Eigen::VectorXd DictOperator::solve(const Eigen::VectorXd& b, const SolveConfig& cfg) const {
    // Jacobi-preconditioned CG. The chain only ever solves with gamma > 0,
    // so no kernel handling is needed; a caller-supplied singular operator
    // surfaces as non-convergence.
    Eigen::VectorXd inv_diag = diag_.unaryExpr(
        [](double d) { return d > 0.0 ? 1.0 / d : 1.0; });
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd r = b;
    double bnorm = b.norm();
    if (bnorm == 0.0) return x;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    uint32_t iters = cfg.iters_for(n_);
    for (uint32_t it = 0; it < iters; ++it) {
        if (r.norm() <= cfg.rel_tol * bnorm) return x;
        Eigen::VectorXd Ap = apply(p);
        double pAp = p.dot(Ap);
        if (pAp <= 0.0) break;
        double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        z = inv_diag.cwiseProduct(r);
        double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    if (r.norm() <= cfg.rel_tol * bnorm) return x;
    throw SolverFailure(r.norm() / bnorm);
}

double DictOperator::approx_leverage(const Eigen::VectorXd& a, const SolveConfig& cfg) const {
    return a.dot(solve(a, cfg));
}

Eigen::MatrixXd DictOperator::dense() const {
    Eigen::MatrixXd K = gamma_ * Eigen::MatrixXd::Identity(n_, n_);
    for (const auto& [id, w] : rows_) {
        Eigen::VectorXd a = dict_->row(id);
        K += w * a * a.transpose();
    }
    return K;
}

DictOperator DictOperator::scaled(double factor) const {
    std::vector<WeightedRow> rows = rows_;
    for (auto& r : rows) r.w *= factor;
    return DictOperator(*dict_, std::move(rows), gamma_ * factor);
}

Eigen::MatrixXd MatrixSparsifier::dense(const Dictionary& dict) const {
    return to_operator(dict).dense();
}

// ---------------------------------------------------------------------------
// MatrixLevelStack

MatrixLevelStack::MatrixLevelStack(const Dictionary& dict, double epsilon, double kappa_u,
                                   double gamma, uint64_t seed, const PipelineConstants& consts)
    : m_(dict.m()), n_(dict.n()), epsilon_(epsilon), kappa_u_(kappa_u), gamma_(gamma),
      seed_(seed), consts_(consts) {
    if (epsilon <= 0.0 || epsilon >= 1.0)
        throw std::invalid_argument("MatrixLevelStack: epsilon out of (0,1)");
    if (kappa_u < 1.0) throw std::invalid_argument("MatrixLevelStack: kappa_u < 1");
    if (gamma < 0.0) throw std::invalid_argument("MatrixLevelStack: gamma < 0");
    S_ = static_cast<uint32_t>(std::ceil(std::log2(kappa_u))) + 10;
    double lm = std::log2(static_cast<double>(std::max(m_, 2u)));
    double ln = std::log2(static_cast<double>(std::max(n_, 2u)));
    T_ = static_cast<uint32_t>(std::ceil(consts.ct_structured * lm));
    if (T_ == 0) T_ = 1;
    C_ = consts.c1_structured * lm * ln / (epsilon * epsilon * epsilon);
    build();
}

void MatrixLevelStack::build() {
    double eta = 1.0 / std::sqrt(C_);
    uint64_t N = static_cast<uint64_t>(m_) + n_;
    double sqrt_gamma = std::sqrt(gamma_);
    row_sketches_.reserve(static_cast<size_t>(S_) * T_);
    identity_tables_.reserve(static_cast<size_t>(S_) * T_);
    for (uint32_t s = 0; s < S_; ++s) {
        for (uint32_t t = 0; t < T_; ++t) {
            HHParams params = hh_params_for(N, eta, derive_seed(seed_, kCellSeedTag + cell(s, t)),
                                            consts_.cw, consts_.cd);
            row_sketches_.emplace_back(params, n_, consts_.mem_cap_bytes);
            // identity rows subsampled at the cell's own rate, unlike the
            // graph stack where they are present at every level
            std::vector<std::pair<uint64_t, RowEntry>> unit_rows;
            if (gamma_ > 0.0) {
                for (uint32_t v = 0; v < n_; ++v) {
                    uint64_t id = static_cast<uint64_t>(m_) + v;
                    if (cell_includes_row(s, t, static_cast<uint32_t>(id)))
                        unit_rows.emplace_back(id, RowEntry{v, sqrt_gamma});
                }
            }
            identity_tables_.emplace_back(params, n_, unit_rows);
        }
    }
}

bool MatrixLevelStack::cell_includes_row(uint32_t s, uint32_t t, uint32_t i) const {
    return prf_rate_bit(seed_, kCellStreamBase + cell(s, t), i, s);
}

void MatrixLevelStack::ingest(const RowUpdate& upd, const Dictionary& dict) {
    if (upd.row >= m_) throw std::invalid_argument("MatrixLevelStack: row id out of range");
    if (dict.m() != m_ || dict.n() != n_)
        throw std::invalid_argument("MatrixLevelStack: dictionary mismatch");
    double sign = upd.op == StreamOp::Insert ? 1.0 : -1.0;
    std::vector<RowEntry> row = sparse_entries(dict.row(upd.row));
    for (uint32_t s = 0; s < S_; ++s)
        for (uint32_t t = 0; t < T_; ++t)
            if (cell_includes_row(s, t, upd.row))
                row_sketches_[cell(s, t)].update(upd.row, row, sign);
}

void MatrixLevelStack::ingest(const std::vector<RowUpdate>& stream, const Dictionary& dict) {
    for (const auto& upd : stream) ingest(upd, dict);
}

double MatrixLevelStack::cell_point_query(uint32_t s, uint32_t t, uint32_t i,
                                          const Eigen::VectorXd& y) const {
    return row_sketches_[cell(s, t)].point_query_with(identity_tables_[cell(s, t)], i, y);
}

double MatrixLevelStack::cell_sq_norm(uint32_t s, uint32_t t, const Eigen::VectorXd& y) const {
    return row_sketches_[cell(s, t)].estimate_sq_norm_with(identity_tables_[cell(s, t)], y);
}

void MatrixLevelStack::merge(const MatrixLevelStack& other) {
    if (m_ != other.m_ || n_ != other.n_ || S_ != other.S_ || T_ != other.T_ ||
        seed_ != other.seed_ || gamma_ != other.gamma_ || epsilon_ != other.epsilon_)
        throw std::invalid_argument("MatrixLevelStack::merge: parameter mismatch");
    for (size_t c = 0; c < row_sketches_.size(); ++c)
        row_sketches_[c].merge(other.row_sketches_[c]);
}

bool MatrixLevelStack::table_equal(const MatrixLevelStack& other) const {
    if (m_ != other.m_ || n_ != other.n_ || S_ != other.S_ || T_ != other.T_) return false;
    for (size_t c = 0; c < row_sketches_.size(); ++c)
        if (!row_sketches_[c].table_equal(other.row_sketches_[c])) return false;
    return true;
}

uint64_t MatrixLevelStack::allocated_bytes() const {
    uint64_t total = 0;
    for (const auto& sk : row_sketches_) total += sk.allocated_bytes();
    for (const auto& tb : identity_tables_) total += tb.allocated_bytes();
    return total;
}

void MatrixLevelStack::serialize(std::ostream& out) const {
    put(out, kStackMagic);
    put(out, kStackVersion);
    put(out, m_);
    put(out, n_);
    put(out, S_);
    put(out, T_);
    put(out, epsilon_);
    put(out, kappa_u_);
    put(out, gamma_);
    put(out, seed_);
    put(out, consts_.c1_structured);
    put(out, consts_.ct_structured);
    put(out, consts_.cw);
    put(out, consts_.cd);
    for (const auto& sk : row_sketches_) sk.serialize(out);
}

MatrixLevelStack MatrixLevelStack::deserialize(std::istream& in, const Dictionary& dict) {
    if (get<uint32_t>(in) != kStackMagic)
        throw std::runtime_error("MatrixLevelStack: bad magic");
    if (get<uint32_t>(in) != kStackVersion)
        throw std::runtime_error("MatrixLevelStack: unsupported version");
    auto m = get<uint32_t>(in);
    auto n = get<uint32_t>(in);
    auto S = get<uint32_t>(in);
    auto T = get<uint32_t>(in);
    auto epsilon = get<double>(in);
    auto kappa_u = get<double>(in);
    auto gamma = get<double>(in);
    auto seed = get<uint64_t>(in);
    PipelineConstants consts;
    consts.c1_structured = get<double>(in);
    consts.ct_structured = get<double>(in);
    consts.cw = get<double>(in);
    consts.cd = get<double>(in);
    if (dict.m() != m || dict.n() != n)
        throw std::runtime_error("MatrixLevelStack: dictionary does not match header");
    MatrixLevelStack stack(dict, epsilon, kappa_u, gamma, seed, consts);
    if (stack.S_ != S || stack.T_ != T)
        throw std::runtime_error("MatrixLevelStack: grid shape mismatch on load");
    for (auto& sk : stack.row_sketches_) {
        HHSketch loaded = HHSketch::deserialize(in);
        if (!(loaded.params() == sk.params()) || loaded.dim() != sk.dim())
            throw std::runtime_error("MatrixLevelStack: cell parameter mismatch on load");
        sk = std::move(loaded);
    }
    return stack;
}

// ---------------------------------------------------------------------------
// recovery

std::vector<DictOperator::WeightedRow> row_sample_matrix(
    const MatrixLevelStack& stack, const Dictionary& dict, const DictOperator& coarse,
    double epsilon, double c, const PipelineConstants& consts,
    std::vector<RowSampleDecision>* decisions) {
    if (c <= 0.0 || c > 1.0) throw std::invalid_argument("row_sample_matrix: c out of (0,1]");
    uint32_t m = stack.m();
    uint32_t n = stack.n();
    double C = stack.threshold_C();
    uint64_t rep_seed = derive_seed(stack.seed(), kRepetitionStream);
    std::vector<DictOperator::WeightedRow> kept;
    if (decisions) {
        decisions->clear();
        decisions->reserve(m);
    }
    for (uint32_t i = 0; i < m; ++i) {
        RowSampleDecision d;
        d.id = i;
        Eigen::VectorXd a = dict.row(i);
        Eigen::VectorXd y = coarse.solve(a, consts.solver);
        double tau = a.dot(y);
        if (tau < 0.0) tau = 0.0;
        if (tau > 1.0 / c) tau = 1.0 / c;
        d.tau = tau;
        d.p = sampling_probability(tau, epsilon, n, consts);
        uint32_t s = level_for_probability(d.p);
        if (s == kSkipped || s >= stack.rates()) {
            d.rate = kSkipped;
            if (decisions) decisions->push_back(d);
            continue;
        }
        d.rate = s;
        d.repetition = static_cast<uint32_t>(prf(rep_seed, 0, i) % stack.repetitions());
        d.estimate = stack.cell_point_query(s, d.repetition, i, y);
        d.norm_sq = stack.cell_sq_norm(s, d.repetition, y);
        d.recovered = d.estimate * d.estimate >= d.norm_sq / C;
        if (d.recovered) kept.push_back({i, std::ldexp(1.0, static_cast<int>(s))});
        if (decisions) decisions->push_back(d);
    }
    return kept;
}

std::vector<MatrixLevelStack> make_matrix_chain_stacks(const Dictionary& dict, double epsilon,
                                                       double lambda_u, double kappa_u,
                                                       uint64_t seed,
                                                       const PipelineConstants& consts) {
    if (lambda_u <= 0.0) throw std::invalid_argument("make_matrix_chain_stacks: lambda_u <= 0");
    auto d = static_cast<uint32_t>(std::ceil(std::log2(std::max(kappa_u, 2.0))));
    std::vector<MatrixLevelStack> stacks;
    stacks.reserve(static_cast<size_t>(d) + 2);
    for (uint32_t l = 0; l <= d; ++l)
        stacks.emplace_back(dict, epsilon, kappa_u, lambda_u / std::ldexp(1.0, static_cast<int>(l)),
                            derive_seed(seed, 0x57a7ull + l), consts);
    stacks.emplace_back(dict, epsilon, kappa_u, 0.0, derive_seed(seed, 0x57a7ull + d + 1), consts);
    return stacks;
}

MatrixSparsifier recover_matrix_sparsifier(const std::vector<MatrixLevelStack>& stacks,
                                           const Dictionary& dict, double epsilon,
                                           double lambda_u, double kappa_u,
                                           const PipelineConstants& consts) {
    auto d = static_cast<uint32_t>(std::ceil(std::log2(std::max(kappa_u, 2.0))));
    if (stacks.size() != static_cast<size_t>(d) + 2)
        throw std::invalid_argument("recover_matrix_sparsifier: expected d+2 stacks");
    uint32_t n = dict.n();
    double shrink = 1.0 / (2.0 * (1.0 + epsilon));
    double c_inductive = (1.0 - epsilon) * shrink;
    auto gamma_of = [&](uint32_t l) { return lambda_u / std::ldexp(1.0, static_cast<int>(l)); };

    MatrixSparsifier current;
    current.n = n;
    current.gamma = gamma_of(0);
    current.rows = row_sample_matrix(stacks[0], dict, DictOperator(dict, {}, gamma_of(0)),
                                     epsilon, 0.5, consts);

    for (uint32_t l = 1; l <= d; ++l) {
        DictOperator coarse = current.to_operator(dict).scaled(shrink);
        MatrixSparsifier next;
        next.n = n;
        next.gamma = gamma_of(l);
        next.rows = row_sample_matrix(stacks[l], dict, coarse, epsilon, c_inductive, consts);
        current = std::move(next);
    }

    DictOperator coarse = current.to_operator(dict).scaled(shrink);
    MatrixSparsifier fin;
    fin.n = n;
    fin.gamma = 0.0;
    fin.rows = row_sample_matrix(stacks[d + 1], dict, coarse, epsilon, c_inductive, consts);
    return fin;
}

} // namespace sparsify
