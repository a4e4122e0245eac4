#include "s2m/bench.hpp"

#include <algorithm>
#include <chrono>

namespace s2m {

static double median_of(std::vector<double>& xs) {
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

template <typename F>
static double timed_median_ms(F&& fn, int iterations) {
    using clock = std::chrono::steady_clock;
    fn();  // warmup
    fn();
    std::vector<double> ms;
    ms.reserve(iterations);
    for (int i = 0; i < iterations; ++i) {
        const auto t0 = clock::now();
        fn();
        const auto t1 = clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return median_of(ms);
}

BenchResult bench_s2m_forward(const S2MModel& model, int iterations, uint64_t seed) {
    Rng rng(seed);
    Skeleton x{};
    for (auto& j : x)
        for (auto& c : j) c = rng.uniform(-90.0, 90.0);

    volatile double sink = 0.0;
    BenchResult r;
    r.name = "s2m_forward";
    r.iterations = iterations;
    r.median_ms = timed_median_ms(
        [&] {
            const S2MOut out = s2m_forward(model, x);
            sink = sink + out.mesh(0, 0);
        },
        iterations);
    r.fps = 1000.0 / r.median_ms;
    r.macs = count_macs(model);
    r.params = count_params(model);
    return r;
}

BenchResult bench_reconstruct(const MGFPModel& model, const SyntheticSample& sample,
                              const SynthConfig& cfg, int iterations) {
    volatile double sink = 0.0;
    BenchResult r;
    r.name = "reconstruct";
    r.iterations = iterations;
    r.median_ms = timed_median_ms(
        [&] {
            const ReconResult res = reconstruct(model, sample.rig, sample.heatmaps,
                                                sample.features, cfg.softargmax_temp,
                                                cfg.heatmap_down, true);
            sink = sink + res.mesh(0, 0);
        },
        iterations);
    r.fps = 1000.0 / r.median_ms;
    r.macs = count_macs_mgfp(model);
    r.params = count_params_mgfp(model);
    return r;
}

}  // namespace s2m
