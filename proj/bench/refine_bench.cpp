// Benchmark: serial vs OpenMP-parallel recovery loop over candidate edges.
//
//   refine_bench [n] [p] [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sparsify/refine.hpp"

using namespace sparsify;

namespace {

double run_once(const LevelStack& stack, const CoarseOperator& coarse, Execution exec,
                size_t& edges_out) {
    auto t0 = std::chrono::steady_clock::now();
    Sparsifier sp = refine_sparsifier(stack, coarse, 0.0, 0.5, 1.0, {}, exec);
    edges_out = sp.edges.size();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    uint32_t n = argc > 1 ? static_cast<uint32_t>(std::atoi(argv[1])) : 60;
    double p = argc > 2 ? std::atof(argv[2]) : 0.2;
    int reps = argc > 3 ? std::atoi(argv[3]) : 3;

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<EdgeUpdate> stream;
    std::vector<CoarseOperator::WeightedEdge> exact;
    for (uint32_t u = 0; u < n; ++u)
        for (uint32_t v = u + 1; v < n; ++v)
            if (unif(rng) < p) {
                stream.push_back({StreamOp::Insert, u, v, 1});
                exact.push_back({edge_index(u, v, n), 1.0});
            }

    LevelStack stack(n, 0.5, 0.0, 99);
    stack.ingest(stream);
    CoarseOperator coarse(n, exact, 0.0);

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif
    std::printf("n=%u edges=%zu candidates=%llu reps=%d\n", n, stream.size(),
                static_cast<unsigned long long>(num_pairs(n)), reps);

    for (auto [name, exec] : {std::pair{"serial  ", Execution::Serial},
                              std::pair{"parallel", Execution::Parallel}}) {
        double best = 1e100;
        size_t edges = 0;
        for (int r = 0; r < reps; ++r) best = std::min(best, run_once(stack, coarse, exec, edges));
        std::printf("%s  best %.3f s  (%.0f candidates/s, %zu edges recovered)\n", name, best,
                    static_cast<double>(num_pairs(n)) / best, edges);
    }
    return 0;
}
