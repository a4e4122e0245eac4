#include <cmath>

#include "doctest.h"
#include "s2m/fusion.hpp"
#include "s2m/synth.hpp"

using namespace s2m;

static SynthConfig fast_cfg() {
    SynthConfig cfg;
    cfg.channels = 21;  // keep rendering light in unit tests
    return cfg;
}

TEST_CASE("same seed gives a bitwise identical sample") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    const SynthConfig cfg = fast_cfg();
    const SyntheticSample a = synthesize_sample(t, tree, cfg, 123);
    const SyntheticSample b = synthesize_sample(t, tree, cfg, 123);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) CHECK(a.skeleton[j][c] == b.skeleton[j][c]);
    for (size_t i = 0; i < a.mesh.a.size(); ++i) CHECK(a.mesh.a[i] == b.mesh.a[i]);
    for (int n = 0; n < cfg.n_views; ++n) {
        for (size_t i = 0; i < a.heatmaps[n].v.size(); ++i)
            CHECK(a.heatmaps[n].v[i] == b.heatmaps[n].v[i]);
        for (size_t i = 0; i < a.features[n].v.size(); ++i)
            CHECK(a.features[n].v[i] == b.features[n].v[i]);
    }
}

TEST_CASE("zero corruption: soft-argmax recovers true projections within 0.1 px") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    const SynthConfig cfg = fast_cfg();
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        const SyntheticSample s = synthesize_sample(t, tree, cfg, seed);
        for (int n = 0; n < cfg.n_views; ++n) {
            for (int j = 0; j < kNumJoints; ++j) {
                const Vec2 truth = project_point(s.rig.views[n], s.skeleton[j]);
                const Vec2 p = soft_argmax(s.heatmaps[n].channel(j), s.heatmaps[n].height,
                                           s.heatmaps[n].width, cfg.softargmax_temp);
                const double du = p[0] * cfg.heatmap_down - truth[0];
                const double dv = p[1] * cfg.heatmap_down - truth[1];
                CHECK(std::hypot(du, dv) < 0.1);
            }
        }
    }
}

TEST_CASE("zero corruption end to end: DLT recovers the skeleton within 0.5 mm") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    const SynthConfig cfg = fast_cfg();
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        const SyntheticSample s = synthesize_sample(t, tree, cfg, seed);
        const FusionSample f = prepare_fusion_sample(s, cfg);
        for (int j = 0; j < kNumJoints; ++j)
            CHECK(norm3(sub(f.xbar[j], s.skeleton[j])) < 0.5);
    }
}

TEST_CASE("heatmap peaks correspond to true projections before corruption") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    const SynthConfig cfg = fast_cfg();
    const SyntheticSample s = synthesize_sample(t, tree, cfg, 5);
    const int hm = cfg.heatmap_size();
    for (int j = 0; j < kNumJoints; ++j) {
        const Vec2 truth = project_point(s.rig.views[0], s.skeleton[j]);
        const double* ch = s.heatmaps[0].channel(j);
        int best = 0;
        for (int i = 1; i < hm * hm; ++i)
            if (ch[i] > ch[best]) best = i;
        const double bu = (best % hm) * cfg.heatmap_down;
        const double bv = (best / hm) * cfg.heatmap_down;
        CHECK(std::abs(bu - truth[0]) <= cfg.heatmap_down);
        CHECK(std::abs(bv - truth[1]) <= cfg.heatmap_down);
        // per-channel max is positive
        CHECK(ch[best] > 0.0);
    }
}

TEST_CASE("peak jitter corrupts heatmaps but feature maps stay clean") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    SynthConfig clean = fast_cfg();
    SynthConfig noisy = fast_cfg();
    noisy.jitter_px = 2.0;
    const SyntheticSample a = synthesize_sample(t, tree, clean, 31);
    const SyntheticSample b = synthesize_sample(t, tree, noisy, 31);

    bool heatmap_differs = false;
    for (size_t i = 0; i < a.heatmaps[0].v.size(); ++i)
        if (a.heatmaps[0].v[i] != b.heatmaps[0].v[i]) heatmap_differs = true;
    CHECK(heatmap_differs);
    for (size_t i = 0; i < a.features[0].v.size(); ++i)
        CHECK(a.features[0].v[i] == b.features[0].v[i]);
}

TEST_CASE("feature channels are scaled bumps of their keypoint") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    SynthConfig cfg = fast_cfg();
    cfg.channels = 42;  // two channels per keypoint
    const SyntheticSample s = synthesize_sample(t, tree, cfg, 77);
    const int hm = cfg.heatmap_size();
    for (int c = 0; c < cfg.channels; ++c) {
        const int j = c % kNumJoints;
        const Vec2 truth = project_point(s.rig.views[0], s.skeleton[j]);
        const double* ch = s.features[0].channel(c);
        int best = 0;
        for (int i = 1; i < hm * hm; ++i)
            if (ch[i] > ch[best]) best = i;
        CHECK(std::abs((best % hm) * cfg.heatmap_down - truth[0]) <= cfg.heatmap_down);
        CHECK(std::abs((best / hm) * cfg.heatmap_down - truth[1]) <= cfg.heatmap_down);
        CHECK(ch[best] >= cfg.feature_scale_min * 0.5);
        CHECK(ch[best] <= cfg.feature_scale_max);
    }
}

TEST_CASE("value noise keeps heatmaps nonnegative") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    SynthConfig cfg = fast_cfg();
    cfg.value_noise = 0.05;
    const SyntheticSample s = synthesize_sample(t, tree, cfg, 99);
    for (const auto& h : s.heatmaps)
        for (double v : h.v) {
            CHECK(v >= 0.0);
            CHECK(std::isfinite(v));
        }
}
