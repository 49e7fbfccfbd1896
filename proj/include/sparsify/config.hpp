#ifndef SPARSIFY_CONFIG_HPP
#define SPARSIFY_CONFIG_HPP

#include <cmath>
#include <cstdint>

#include "sparsify/sdd_solve.hpp"

namespace sparsify {

// Pipeline constants. The theory hides these in O(.); the defaults here are
// calibrated so the desk-scale certification suite passes with margin while
// staying inside a single-machine memory budget (see README for the
// calibration numbers).
struct PipelineConstants {
    // eta = epsilon / (c1 * sqrt(log2 n)) for the per-level sketches.
    double c1 = 2.0;
    // oversampling: p_e = c2 * tau~ * log2(n) / eps^2
    double c2 = 4.0;
    // sketch table sizing: w >= cw / eta^2, d >= cd * log2 N
    double cw = 32.0;
    double cd = 0.75;
    // structured mode: C = c1_structured * eps^-3 * log2 m * log2 n
    double c1_structured = 4.0;
    double ct_structured = 1.0; // T = ceil(ct * log2 m) repetitions

    uint64_t mem_cap_bytes = 1ull << 44; // dense-equivalent per-sketch cap

    SolveConfig solver;
};

inline double eta_for(double epsilon, uint32_t n, const PipelineConstants& k) {
    return epsilon / (k.c1 * std::sqrt(std::log2(static_cast<double>(std::max(n, 2u)))));
}

inline double sampling_probability(double tau, double epsilon, uint32_t n,
                                   const PipelineConstants& k) {
    return k.c2 * tau * std::log2(static_cast<double>(std::max(n, 2u))) / (epsilon * epsilon);
}

// Level s with min{1,p} <= 2^-s <= min{1,2p}.
inline uint32_t level_for_probability(double p) {
    if (p >= 1.0) return 0;
    if (p <= 0.0) return 0xffffffffu;
    double s = std::floor(std::log2(1.0 / p));
    // guard rounding so the sandwich really holds
    auto si = static_cast<int64_t>(s);
    while (si > 0 && std::ldexp(1.0, -static_cast<int>(si)) < p) --si;
    while (std::ldexp(1.0, -static_cast<int>(si)) > 2.0 * p) ++si;
    return si < 0 ? 0 : static_cast<uint32_t>(si);
}

} // namespace sparsify

#endif
