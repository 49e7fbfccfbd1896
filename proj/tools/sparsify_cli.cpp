// sparsify: sketch / recover / verify command-line front end.
//
// Exit codes: 0 pass, 1 certification fail, 2 input error, 3 capacity or
// solver error.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsify/chain.hpp"
#include "sparsify/prf.hpp"
#include "sparsify/structured.hpp"
#include "sparsify/weighted.hpp"

namespace {

using namespace sparsify;

constexpr uint32_t kBundleMagic = 0x53504244u; // "SPBD"
constexpr uint32_t kBundleVersion = 1;

enum class Mode : uint32_t { Graph = 0, Weighted = 1, Structured = 2 };

Mode parse_mode(const std::string& s) {
    if (s == "graph") return Mode::Graph;
    if (s == "weighted") return Mode::Weighted;
    if (s == "structured") return Mode::Structured;
    throw CLI::ValidationError("--mode must be graph, weighted, or structured");
}

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("bundle: truncated input");
    return v;
}

struct BundleHeader {
    Mode mode = Mode::Graph;
    uint32_t n = 0;
    double epsilon = 0.0;
    uint64_t seed = 0;
    double lambda_u = 0.0, lambda_l = 0.0; // graph/weighted schedule
    uint64_t wmax = 1;
    double kappa_u = 0.0; // structured
};

void write_header(std::ostream& out, const BundleHeader& h) {
    put(out, kBundleMagic);
    put(out, kBundleVersion);
    put(out, static_cast<uint32_t>(h.mode));
    put(out, h.n);
    put(out, h.epsilon);
    put(out, h.seed);
    put(out, h.lambda_u);
    put(out, h.lambda_l);
    put(out, h.wmax);
    put(out, h.kappa_u);
}

BundleHeader read_header(std::istream& in) {
    if (get<uint32_t>(in) != kBundleMagic) throw std::runtime_error("bundle: bad magic");
    if (get<uint32_t>(in) != kBundleVersion) throw std::runtime_error("bundle: bad version");
    BundleHeader h;
    h.mode = static_cast<Mode>(get<uint32_t>(in));
    h.n = get<uint32_t>(in);
    h.epsilon = get<double>(in);
    h.seed = get<uint64_t>(in);
    h.lambda_u = get<double>(in);
    h.lambda_l = get<double>(in);
    h.wmax = get<uint64_t>(in);
    h.kappa_u = get<double>(in);
    return h;
}

ChainSchedule schedule_from(const BundleHeader& h) {
    return build_schedule(h.lambda_u, h.lambda_l);
}

// Optional `--gamma-levels LU:LL` override of the default unweighted bounds.
ChainSchedule schedule_for(uint32_t n, const std::string& gamma_levels) {
    if (gamma_levels.empty() || gamma_levels == "auto") return build_schedule(n);
    auto colon = gamma_levels.find(':');
    if (colon == std::string::npos)
        throw std::runtime_error("--gamma-levels: expected LAMBDA_U:LAMBDA_L or auto");
    return build_schedule(std::stod(gamma_levels.substr(0, colon)),
                          std::stod(gamma_levels.substr(colon + 1)));
}

struct SketchArgs {
    uint32_t n = 0;
    double epsilon = 0.5;
    uint64_t seed = 1;
    std::string mode = "graph";
    std::string gamma_levels = "auto";
    std::string stream_path;
    std::string out_path;
    std::string dict_path;
    uint64_t wmax = 1;
    double kappa_u = 0.0;
    double lambda_u = 0.0;
};

int cmd_sketch(const SketchArgs& a) {
    Mode mode = parse_mode(a.mode);
    std::ifstream sf(a.stream_path);
    if (!sf) {
        std::cerr << "error: cannot open stream " << a.stream_path << "\n";
        return 2;
    }
    std::ofstream out(a.out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot open output " << a.out_path << "\n";
        return 2;
    }

    auto t0 = std::chrono::steady_clock::now();
    size_t tokens = 0;
    uint64_t bytes = 0;

    BundleHeader h;
    h.mode = mode;
    h.n = a.n;
    h.epsilon = a.epsilon;
    h.seed = a.seed;
    h.wmax = a.wmax;
    h.kappa_u = a.kappa_u;

    if (mode == Mode::Graph) {
        auto stream = parse_stream(sf, false);
        tokens = stream.size();
        ChainSchedule sched = schedule_for(a.n, a.gamma_levels);
        h.lambda_u = sched.lambda_u;
        h.lambda_l = sched.lambda_l;
        auto stacks = make_chain_stacks(a.n, a.epsilon, a.seed, sched);
        ingest_all(stacks, stream);
        write_header(out, h);
        put(out, static_cast<uint32_t>(stacks.size()));
        for (const auto& st : stacks) {
            st.serialize(out);
            bytes += st.allocated_bytes();
        }
    } else if (mode == Mode::Weighted) {
        auto stream = parse_stream(sf, true);
        tokens = stream.size();
        ChainSchedule sched = schedule_for(a.n, a.gamma_levels);
        h.lambda_u = sched.lambda_u;
        h.lambda_l = sched.lambda_l;
        WeightedConfig wc{a.wmax};
        std::vector<std::vector<LevelStack>> planes;
        for (uint32_t i = 0; i < wc.bits(); ++i)
            planes.push_back(make_chain_stacks(a.n, a.epsilon, derive_seed(a.seed, 0xb17ull + i), sched));
        for (const auto& upd : stream)
            for (const auto& [bit, sub] : route_update(upd, wc)) ingest_all(planes[bit], sub);
        write_header(out, h);
        put(out, wc.bits());
        put(out, static_cast<uint32_t>(planes[0].size()));
        for (const auto& plane : planes)
            for (const auto& st : plane) {
                st.serialize(out);
                bytes += st.allocated_bytes();
            }
    } else {
        if (a.dict_path.empty() || a.kappa_u <= 0.0 || a.lambda_u <= 0.0) {
            std::cerr << "error: structured mode needs --dict, --kappa-u, --lambda-u\n";
            return 2;
        }
        Dictionary dict = Dictionary::load(a.dict_path);
        auto stream = parse_row_stream(sf);
        tokens = stream.size();
        h.n = dict.n();
        h.lambda_u = a.lambda_u;
        auto stacks = make_matrix_chain_stacks(dict, a.epsilon, a.lambda_u, a.kappa_u, a.seed);
        for (auto& st : stacks) st.ingest(stream, dict);
        write_header(out, h);
        put(out, static_cast<uint32_t>(stacks.size()));
        for (const auto& st : stacks) {
            st.serialize(out);
            bytes += st.allocated_bytes();
        }
    }

    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "sketch: " << tokens << " tokens in " << dt << " s ("
              << (dt > 0 ? static_cast<double>(tokens) / dt : 0.0) << " tokens/s), sketch memory "
              << bytes << " bytes\n";
    return 0;
}

int cmd_recover(const std::string& bundle_path, const std::string& out_path,
                const std::string& dict_path) {
    std::ifstream in(bundle_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open bundle " << bundle_path << "\n";
        return 2;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot open output " << out_path << "\n";
        return 2;
    }
    BundleHeader h = read_header(in);

    if (h.mode == Mode::Graph) {
        auto count = get<uint32_t>(in);
        std::vector<LevelStack> stacks;
        for (uint32_t i = 0; i < count; ++i) stacks.push_back(LevelStack::deserialize(in));
        Sparsifier sp = recover_sparsifier(stacks, h.epsilon, schedule_from(h));
        std::cout << "recover: " << sp.edges.size() << " edges\n";
        sp.serialize(out);
    } else if (h.mode == Mode::Weighted) {
        auto bits = get<uint32_t>(in);
        auto per = get<uint32_t>(in);
        std::vector<Sparsifier> per_bit;
        for (uint32_t b = 0; b < bits; ++b) {
            std::vector<LevelStack> plane;
            for (uint32_t i = 0; i < per; ++i) plane.push_back(LevelStack::deserialize(in));
            per_bit.push_back(recover_sparsifier(plane, h.epsilon, schedule_from(h)));
            std::cout << "recover: bit " << b << ": " << per_bit.back().edges.size() << " edges\n";
        }
        Sparsifier sp = recombine(per_bit);
        std::cout << "recover: " << sp.edges.size() << " edges\n";
        sp.serialize(out);
    } else {
        if (dict_path.empty()) {
            std::cerr << "error: structured recovery needs --dict\n";
            return 2;
        }
        Dictionary dict = Dictionary::load(dict_path);
        auto count = get<uint32_t>(in);
        std::vector<MatrixLevelStack> stacks;
        for (uint32_t i = 0; i < count; ++i)
            stacks.push_back(MatrixLevelStack::deserialize(in, dict));
        MatrixSparsifier sp =
            recover_matrix_sparsifier(stacks, dict, h.epsilon, h.lambda_u, h.kappa_u);
        std::cout << "recover: " << sp.rows.size() << " rows\n";
        out << sp.n << " " << sp.gamma << "\n";
        for (const auto& [id, w] : sp.rows) out << id << " " << w << "\n";
    }
    return 0;
}

struct VerifyArgs {
    std::string stream_path;
    std::string sparsifier_path;
    std::string mode = "graph";
    std::string dict_path;
    double epsilon = 0.5;
    uint32_t n = 0;
    uint32_t dense_cap = 500;
    uint32_t mc_samples = 200;
    uint64_t mc_seed = 7;
};

int verify_dense(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Kt, double eps,
                 size_t kept_rows) {
    CertifyResult res = spectral_certify(K, Kt, eps);
    std::cout << "verify: " << kept_rows << " rows, eigenvalue range [" << res.min_eig << ", "
              << res.max_eig << "]\n";
    if (res.pass()) {
        std::cout << "verify: PASS\n";
        return 0;
    }
    std::cout << "verify: FAIL ("
              << (res.status == CertifyResult::Status::KernelViolation ? "kernel violation"
                                                                       : "eigenvalue violation")
              << ")\n";
    if (res.witness.size()) {
        std::cout << "verify: witness:";
        for (int i = 0; i < res.witness.size(); ++i) std::cout << ' ' << res.witness(i);
        std::cout << "\n";
    }
    return 1;
}

// Non-certifying fallback above the dense cap: Rayleigh-quotient ratios on
// random Gaussian directions projected onto range(K) via one multiply by K.
int verify_monte_carlo(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Kt, double eps,
                       uint32_t samples, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double lo = 1.0, hi = 1.0;
    auto n = K.rows();
    for (uint32_t k = 0; k < samples; ++k) {
        Eigen::VectorXd g(n);
        for (auto i = 0; i < n; ++i) g(i) = gauss(rng);
        Eigen::VectorXd x = K * g; // kills kernel directions
        double denom = x.dot(K * x);
        if (denom <= 0.0) continue;
        double ratio = x.dot(Kt * x) / denom;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    std::cout << "verify: monte-carlo (NON-CERTIFYING), ratio range [" << lo << ", " << hi
              << "] over " << samples << " samples\n";
    bool ok = lo >= 1.0 - eps && hi <= 1.0 + eps;
    std::cout << "verify: " << (ok ? "PASS (sampled)" : "FAIL (sampled)") << "\n";
    return ok ? 0 : 1;
}

int cmd_verify(const VerifyArgs& a) {
    Mode mode = parse_mode(a.mode);
    std::ifstream sf(a.stream_path);
    if (!sf) {
        std::cerr << "error: cannot open stream " << a.stream_path << "\n";
        return 2;
    }
    std::ifstream spf(a.sparsifier_path);
    if (!spf) {
        std::cerr << "error: cannot open sparsifier " << a.sparsifier_path << "\n";
        return 2;
    }

    Eigen::MatrixXd K, Kt;
    size_t kept = 0;
    if (mode == Mode::Structured) {
        if (a.dict_path.empty()) {
            std::cerr << "error: structured verify needs --dict\n";
            return 2;
        }
        Dictionary dict = Dictionary::load(a.dict_path);
        if (dict.n() > a.dense_cap) {
            std::cerr << "error: n exceeds dense cap " << a.dense_cap << "\n";
            return 3;
        }
        auto stream = parse_row_stream(sf);
        std::map<uint32_t, double> mult;
        for (const auto& upd : stream)
            mult[upd.row] += upd.op == StreamOp::Insert ? 1.0 : -1.0;
        std::vector<DictOperator::WeightedRow> rows;
        for (const auto& [id, w] : mult)
            if (w != 0.0) rows.push_back({id, w});
        K = DictOperator(dict, rows, 0.0).dense();

        uint32_t n = 0;
        double gamma = 0.0;
        if (!(spf >> n >> gamma)) {
            std::cerr << "error: bad sparsifier header\n";
            return 2;
        }
        std::vector<DictOperator::WeightedRow> kept_rows;
        uint32_t id;
        double w;
        while (spf >> id >> w) kept_rows.push_back({id, w});
        kept = kept_rows.size();
        Kt = DictOperator(dict, kept_rows, gamma).dense();
        return verify_dense(K, Kt, a.epsilon, kept);
    }

    bool weighted = mode == Mode::Weighted;
    auto stream = parse_stream(sf, weighted);
    EdgeMultiplicitySet graph(a.n);
    for (const auto& upd : stream) graph.apply(upd, weighted);
    Sparsifier sp = Sparsifier::deserialize(spf);
    if (sp.n != a.n) {
        std::cerr << "error: sparsifier n=" << sp.n << " does not match --n " << a.n << "\n";
        return 2;
    }
    kept = sp.edges.size();
    if (a.n > a.dense_cap)
        return verify_monte_carlo(exact_laplacian(graph), sp.dense(), a.epsilon, a.mc_samples,
                                  a.mc_seed);
    K = exact_laplacian(graph);
    Kt = sp.dense();
    return verify_dense(K, Kt, a.epsilon, kept);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-pass dynamic-stream spectral sparsification"};
    app.require_subcommand(1);

    SketchArgs sa;
    auto* sketch = app.add_subcommand("sketch", "ingest a stream into a sketch bundle");
    sketch->add_option("--n", sa.n, "vertex count (graph/weighted)");
    sketch->add_option("--epsilon", sa.epsilon, "target approximation")->required();
    sketch->add_option("--seed", sa.seed, "sketch seed");
    sketch->add_option("--mode", sa.mode, "graph|weighted|structured");
    sketch->add_option("--gamma-levels", sa.gamma_levels, "LAMBDA_U:LAMBDA_L or auto");
    sketch->add_option("--stream", sa.stream_path, "stream file")->required();
    sketch->add_option("--out", sa.out_path, "bundle output path")->required();
    sketch->add_option("--wmax", sa.wmax, "max integer weight (weighted)");
    sketch->add_option("--kappa-u", sa.kappa_u, "condition-number bound (structured)");
    sketch->add_option("--lambda-u", sa.lambda_u, "spectral upper bound (structured)");
    sketch->add_option("--dict", sa.dict_path, "dictionary file (structured)");

    std::string bundle_path, recover_out, recover_dict;
    auto* recover = app.add_subcommand("recover", "recover a sparsifier from a bundle");
    recover->add_option("--bundle", bundle_path, "bundle from sketch")->required();
    recover->add_option("--out", recover_out, "sparsifier output path")->required();
    recover->add_option("--dict", recover_dict, "dictionary file (structured)");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "certify a sparsifier against a replayed stream");
    verify->add_option("--stream", va.stream_path, "stream file")->required();
    verify->add_option("--sparsifier", va.sparsifier_path, "sparsifier file")->required();
    verify->add_option("--n", va.n, "vertex count (graph/weighted)");
    verify->add_option("--epsilon", va.epsilon, "allowed deviation")->required();
    verify->add_option("--mode", va.mode, "graph|weighted|structured");
    verify->add_option("--dict", va.dict_path, "dictionary file (structured)");
    verify->add_option("--dense-cap", va.dense_cap, "max n for dense certification");
    verify->add_option("--mc-samples", va.mc_samples, "samples for monte-carlo fallback");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sketch->parsed()) return cmd_sketch(sa);
        if (recover->parsed()) return cmd_recover(bundle_path, recover_out, recover_dict);
        if (verify->parsed()) return cmd_verify(va);
    } catch (const SolverFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
        return 3;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        return msg.find("capacity") != std::string::npos ? 3 : 2;
    }
    return 2;
}
