#pragma once

#include <string>

#include "s2m/fusion.hpp"

namespace s2m {

struct BenchResult {
    std::string name;
    int batch = 1;
    int iterations = 0;
    double median_ms = 0.0;
    double fps = 0.0;       // 1 / median latency
    long long macs = 0;     // analytic, from the counting rules
    long long params = 0;
};

/// Median wall time of the skeleton-to-mesh forward pass (after warmup).
BenchResult bench_s2m_forward(const S2MModel& model, int iterations, uint64_t seed = 7);

/// Median wall time of the full multi-view reconstruction.
BenchResult bench_reconstruct(const MGFPModel& model, const SyntheticSample& sample,
                              const SynthConfig& cfg, int iterations);

}  // namespace s2m
