#pragma once

#include "s2m/hand.hpp"

namespace s2m {

/// Settings for the synthetic multi-camera simulator that stands in for
/// real captures: ground truth comes from sampled poses, observations from
/// rendered (optionally corrupted) heatmaps and feature maps.
struct SynthConfig {
    int n_views = 4;
    double radius_mm = 700.0;
    double focal_px = 230.0;
    int image_size = 256;
    int heatmap_down = 4;        // heatmap grid = image / 4

    double heatmap_sigma = 2.5;  // heatmap px
    double jitter_px = 0.0;      // heatmap peak jitter std, image px
    double value_noise = 0.0;    // additive per-pixel noise std

    int channels = 128;          // feature channels C
    double feature_sigma = 1.25;  // base width, heatmap px
    double feature_scale_min = 0.95;
    double feature_scale_max = 1.05;

    double softargmax_temp = 16.0;
    double root_trans_mm = 30.0;  // hand placement jitter
    PoseLimits limits;

    int heatmap_size() const { return image_size / heatmap_down; }
};

/// One multi-view frame. Heatmap channel j peaks at keypoint j's (possibly
/// jittered) projection; feature channel c is a clean bump for keypoint
/// (c mod 21) with a per-channel random scale, so features carry cleaner
/// geometry than corrupted heatmaps.
struct SyntheticSample {
    uint64_t seed = 0;
    Skeleton skeleton{};  // ground truth
    Mat mesh;             // ground truth, V x 3
    CameraRig rig;
    std::vector<HeatmapStack> heatmaps;  // per view, 21 channels
    std::vector<FeatureMap> features;    // per view, C channels
};

SyntheticSample synthesize_sample(const HandTemplate& tmpl, const KinematicTree& tree,
                                  const SynthConfig& cfg, uint64_t seed);

/// Ground-truth-only variant (skeleton + mesh, no rendering); used for
/// stage-1 pair datasets where the maps are never consumed.
void synthesize_pose_pair(const HandTemplate& tmpl, const KinematicTree& tree,
                          const SynthConfig& cfg, uint64_t seed, Skeleton& skeleton, Mat& mesh);

}  // namespace s2m
