#include "s2m/synth.hpp"

#include <cmath>

namespace s2m {

namespace {
constexpr uint64_t kPoseStream = 0x706f73u;   // "pos"
constexpr uint64_t kRigStream = 0x726967u;    // "rig"
constexpr uint64_t kJitterStream = 0x6a6974u; // "jit"
constexpr uint64_t kValueStream = 0x76616cu;  // "val"
constexpr uint64_t kFeatStream = 0x666561u;   // "fea"
}  // namespace

static Pose sample_placed_pose(const SynthConfig& cfg, uint64_t seed) {
    Rng rng(Rng::derive(seed, kPoseStream));
    PoseLimits limits = cfg.limits;
    limits.root_trans_range = cfg.root_trans_mm;
    return sample_pose(rng, limits);
}

void synthesize_pose_pair(const HandTemplate& tmpl, const KinematicTree& tree,
                          const SynthConfig& cfg, uint64_t seed, Skeleton& skeleton, Mat& mesh) {
    const Pose pose = sample_placed_pose(cfg, seed);
    const FKResult fk = forward_kinematics(tree, tmpl.rest_skeleton, pose);
    skeleton = fk.joints;
    mesh = lbs_mesh(tmpl, tree, fk);
}

SyntheticSample synthesize_sample(const HandTemplate& tmpl, const KinematicTree& tree,
                                  const SynthConfig& cfg, uint64_t seed) {
    SyntheticSample s;
    s.seed = seed;
    synthesize_pose_pair(tmpl, tree, cfg, seed, s.skeleton, s.mesh);
    s.rig = make_rig(cfg.n_views, cfg.radius_mm, {0, 0, 0}, cfg.focal_px, cfg.image_size,
                     cfg.image_size, Rng::derive(seed, kRigStream));

    const int hm = cfg.heatmap_size();
    const double inv_down = 1.0 / cfg.heatmap_down;
    Rng jitter_rng(Rng::derive(seed, kJitterStream));
    Rng value_rng(Rng::derive(seed, kValueStream));
    Rng feat_rng(Rng::derive(seed, kFeatStream));

    s.heatmaps.resize(cfg.n_views);
    s.features.resize(cfg.n_views);
    for (int n = 0; n < cfg.n_views; ++n) {
        const CameraView& view = s.rig.views[n];
        std::array<Vec2, kNumJoints> proj;
        for (int j = 0; j < kNumJoints; ++j) proj[j] = project_point(view, s.skeleton[j]);

        HeatmapStack& h = s.heatmaps[n];
        h.resize(kNumJoints, hm, hm);
        for (int j = 0; j < kNumJoints; ++j) {
            Vec2 p = proj[j];
            if (cfg.jitter_px > 0.0) {
                p[0] += cfg.jitter_px * jitter_rng.normal();
                p[1] += cfg.jitter_px * jitter_rng.normal();
            }
            render_gaussian({p[0] * inv_down, p[1] * inv_down}, hm, hm, cfg.heatmap_sigma,
                            h.channel(j));
        }
        if (cfg.value_noise > 0.0) {
            for (auto& v : h.v) v = std::max(0.0, v + cfg.value_noise * value_rng.normal());
        }

        FeatureMap& f = s.features[n];
        f.resize(cfg.channels, hm, hm);
        // bump widths cycle through three scales so sharp channels carry
        // fine offsets and wide ones coarse context
        static const double kSigmaMult[3] = {0.5, 1.0, 2.0};
        for (int c = 0; c < cfg.channels; ++c) {
            const int j = c % kNumJoints;
            const double sigma = cfg.feature_sigma * kSigmaMult[(c / kNumJoints) % 3];
            const double sc = feat_rng.uniform(cfg.feature_scale_min, cfg.feature_scale_max);
            double* ch = f.channel(c);
            render_gaussian({proj[j][0] * inv_down, proj[j][1] * inv_down}, hm, hm, sigma,
                            ch);
            for (size_t i = 0; i < static_cast<size_t>(hm) * hm; ++i) ch[i] *= sc;
        }
    }
    return s;
}

}  // namespace s2m
