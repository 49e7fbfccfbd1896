#ifndef SPARSIFY_STRUCTURED_HPP
#define SPARSIFY_STRUCTURED_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsify/config.hpp"
#include "sparsify/hh_sketch.hpp"

namespace sparsify {

// Fixed row dictionary: every streamed row is one of these m rows of R^n.
class Dictionary {
public:
    Dictionary() = default;
    explicit Dictionary(Eigen::MatrixXd rows) : rows_(std::move(rows)) {}

    uint32_t m() const { return static_cast<uint32_t>(rows_.rows()); }
    uint32_t n() const { return static_cast<uint32_t>(rows_.cols()); }
    Eigen::VectorXd row(uint32_t i) const { return rows_.row(i).transpose(); }
    const Eigen::MatrixXd& matrix() const { return rows_; }

    // Text format: header `m n` then m rows of n reals.
    void serialize(std::ostream& out) const;
    static Dictionary deserialize(std::istream& in);
    static Dictionary load(const std::string& path);

private:
    Eigen::MatrixXd rows_;
};

// Row insertion/deletion token referencing a dictionary row id.
struct RowUpdate {
    StreamOp op;
    uint32_t row;
};

std::vector<RowUpdate> parse_row_stream(std::istream& in);

// K~ = sum w_i a_i a_i^T + gamma I over dictionary rows; gamma > 0 required
// for solves (the chain never needs a singular solve).
class DictOperator {
public:
    struct WeightedRow {
        uint32_t id;
        double w;
    };

    DictOperator(const Dictionary& dict, std::vector<WeightedRow> rows, double gamma);

    const std::vector<WeightedRow>& rows() const { return rows_; }
    double gamma() const { return gamma_; }
    uint32_t n() const { return n_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b, const SolveConfig& cfg = {}) const;
    double approx_leverage(const Eigen::VectorXd& a, const SolveConfig& cfg = {}) const;
    Eigen::MatrixXd dense() const;
    DictOperator scaled(double factor) const;

private:
    const Dictionary* dict_;
    uint32_t n_;
    double gamma_;
    std::vector<WeightedRow> rows_;
    Eigen::VectorXd diag_;
};

// Weighted dictionary-row subset plus diagonal term.
struct MatrixSparsifier {
    uint32_t n = 0;
    double gamma = 0.0;
    std::vector<DictOperator::WeightedRow> rows;

    DictOperator to_operator(const Dictionary& dict) const {
        return DictOperator(dict, rows, gamma);
    }
    Eigen::MatrixXd dense(const Dictionary& dict) const;
};

// S x T grid of fully independent samplings: cell (s,t) keeps each
// dictionary row independently at rate 2^-s, with its own sketch; identity
// rows sqrt(gamma) 1_v are sampled into each cell at the same rate. Unlike
// the graph stack, nothing is nested.
class MatrixLevelStack {
public:
    MatrixLevelStack() = default;
    MatrixLevelStack(const Dictionary& dict, double epsilon, double kappa_u, double gamma,
                     uint64_t seed, const PipelineConstants& consts = {});

    uint32_t rates() const { return S_; }
    uint32_t repetitions() const { return T_; }
    double gamma() const { return gamma_; }
    uint64_t seed() const { return seed_; }
    double threshold_C() const { return C_; }
    uint32_t m() const { return m_; }
    uint32_t n() const { return n_; }

    bool cell_includes_row(uint32_t s, uint32_t t, uint32_t i) const;

    void ingest(const RowUpdate& upd, const Dictionary& dict);
    void ingest(const std::vector<RowUpdate>& stream, const Dictionary& dict);

    double cell_point_query(uint32_t s, uint32_t t, uint32_t i, const Eigen::VectorXd& y) const;
    double cell_sq_norm(uint32_t s, uint32_t t, const Eigen::VectorXd& y) const;

    void merge(const MatrixLevelStack& other);
    bool table_equal(const MatrixLevelStack& other) const;
    uint64_t allocated_bytes() const;

    void serialize(std::ostream& out) const;
    static MatrixLevelStack deserialize(std::istream& in, const Dictionary& dict);

private:
    uint32_t m_ = 0, n_ = 0;
    uint32_t S_ = 0, T_ = 0;
    double epsilon_ = 0.0, kappa_u_ = 0.0, gamma_ = 0.0, C_ = 0.0;
    uint64_t seed_ = 0;
    PipelineConstants consts_;
    std::vector<HHSketch> row_sketches_;       // cell (s,t) at index s*T+t
    std::vector<UnitRowTable> identity_tables_; // deterministic, never merged

    void build();
    size_t cell(uint32_t s, uint32_t t) const { return static_cast<size_t>(s) * T_ + t; }
};

struct RowSampleDecision {
    uint32_t id = 0;
    double tau = 0.0;
    double p = 0.0;
    uint32_t rate = 0;       // s_i; 0xffffffff when skipped
    uint32_t repetition = 0; // t_i
    double estimate = 0.0;
    double norm_sq = 0.0;
    bool recovered = false;
};

// One uniformly random repetition per row; row i kept with weight 2^{s_i}
// iff the squared point-query estimate reaches 1/C of the estimated squared
// norm of the sketched vector from the same cell.
std::vector<DictOperator::WeightedRow> row_sample_matrix(
    const MatrixLevelStack& stack, const Dictionary& dict, const DictOperator& coarse,
    double epsilon, double c, const PipelineConstants& consts = {},
    std::vector<RowSampleDecision>* decisions = nullptr);

// Chain of length ceil(log2 kappa_u) + final gamma = 0 step, mirroring the
// graph recovery. stacks[l] must have been maintained with
// gamma(l) = lambda_u / 2^l and stacks.back() with gamma = 0.
MatrixSparsifier recover_matrix_sparsifier(const std::vector<MatrixLevelStack>& stacks,
                                           const Dictionary& dict, double epsilon,
                                           double lambda_u, double kappa_u,
                                           const PipelineConstants& consts = {});

std::vector<MatrixLevelStack> make_matrix_chain_stacks(const Dictionary& dict, double epsilon,
                                                       double lambda_u, double kappa_u,
                                                       uint64_t seed,
                                                       const PipelineConstants& consts = {});

} // namespace sparsify

#endif
