#pragma once

#include <vector>

#include "s2m/linalg.hpp"

namespace s2m {

/// Pinhole camera: K is the 3x3 intrinsic matrix, T the 4x4 rigid
/// world-to-camera transform. Pixel (0,0) is the center of the top-left
/// pixel.
struct CameraView {
    Mat K;  // 3x3, upper triangular, positive focals
    Mat T;  // 4x4 rigid transform
    int width = 0;
    int height = 0;

    Vec3 to_camera(const Vec3& Xw) const;
    Vec3 center() const;  // camera center in world coordinates
};

struct CameraRig {
    std::vector<CameraView> views;
    int size() const { return static_cast<int>(views.size()); }
};

/// Multi-channel heatmap (values are nonnegative after rendering, may be
/// corrupted afterwards).
struct HeatmapStack {
    int channels = 0, height = 0, width = 0;
    std::vector<double> v;

    void resize(int c, int h, int w) {
        channels = c;
        height = h;
        width = w;
        v.assign(static_cast<size_t>(c) * h * w, 0.0);
    }
    double* channel(int c) { return v.data() + static_cast<size_t>(c) * height * width; }
    const double* channel(int c) const { return v.data() + static_cast<size_t>(c) * height * width; }
};

using FeatureMap = HeatmapStack;  // same layout, C channels of H x W floats

/// Standard pinhole projection. Throws DegenerateError if the point has
/// nonpositive depth in the camera frame.
Vec2 project_point(const CameraView& view, const Vec3& X);

/// Jacobian of project_point with respect to the world point (2x3).
void project_point_grad(const CameraView& view, const Vec3& X, Vec2& uv, double duv_dX[2][3]);

/// Renders value exp(-|q - p|^2 / (2 sigma^2)) at every pixel q of an h x w
/// channel. p is in the channel's own pixel coordinates.
void render_gaussian(const Vec2& p, int height, int width, double sigma_px, double* out);

/// Spatial softmax of temperature-scaled values followed by the expectation
/// of pixel coordinates.
Vec2 soft_argmax(const double* values, int height, int width, double temperature);

/// Gradient of a scalar function of the soft-argmax output with respect to
/// the heatmap values: d_values += dL/du * du/dv + dL/dv * dv/dv.
void soft_argmax_backward(const double* values, int height, int width, double temperature,
                          const Vec2& upstream, double* d_values);

/// DLT triangulation of one 3D point from per-view pixel observations.
/// Throws DegenerateError (naming `keypoint_index`) when the homogeneous
/// system is rank deficient.
Vec3 dlt_triangulate_point(const std::vector<Vec2>& obs, const CameraRig& rig, int keypoint_index);

/// Triangulates all 21 keypoints. obs_per_view[n] holds view n's 21 pixel
/// observations.
std::vector<Vec3> dlt_triangulate(const std::vector<std::vector<Vec2>>& obs_per_view,
                                  const CameraRig& rig);

/// Bilinear sample of all channels at continuous position p (grid
/// coordinates); out-of-bounds contributions are zero.
void grid_sample(const FeatureMap& f, const Vec2& p, double* out);

/// Gradients of grid_sample: upstream is dL/d(out), accumulated into the
/// feature-value gradient (same layout as f) and/or dp.
void grid_sample_backward(const FeatureMap& f, const Vec2& p, const double* upstream,
                          std::vector<double>* d_values, Vec2* dp);

}  // namespace s2m
