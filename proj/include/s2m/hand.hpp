#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "s2m/camera.hpp"
#include "s2m/linalg.hpp"

namespace s2m {

inline constexpr int kNumJoints = 21;
inline constexpr int kNumBones = 20;

using Skeleton = std::array<Vec3, kNumJoints>;  // millimeters, world frame, joint 0 = wrist

/// 21-joint hand tree: wrist root plus 5 fingers x 4 joints. The 20 bones
/// are ordered thumb -> index -> middle -> ring -> pinky, proximal to
/// distal; the order is part of every weight file's manifest.
struct KinematicTree {
    std::array<int, kNumJoints> parent{};                    // parent[0] = -1
    std::array<std::pair<int, int>, kNumBones> bones{};      // (parent joint, child joint)

    static KinematicTree standard();
    int root() const { return 0; }
    /// Bone whose child joint is j, or -1 for the root.
    int bone_ending_at(int j) const;
    /// Bones whose parent joint is j.
    std::vector<int> bones_starting_at(int j) const;
};

/// 20 x 6 matrix; row k = [parent endpoint, child endpoint] of bone k.
Mat bones_from_skeleton(const Skeleton& X, const KinematicTree& tree);

struct HandTemplate {
    Skeleton rest_skeleton{};
    Mat vertices;                            // V x 3
    std::vector<std::array<int, 3>> faces;   // triangle indices
    Mat skin_weights;                        // V x 20, rows sum to 1

    int vertex_count() const { return vertices.rows; }
};

/// Deterministic synthetic hand: tube segments per bone (three 8-gon rings
/// plus end caps), blended skin weights at segment boundaries. Hand scale
/// ~180 mm wrist to middle fingertip.
HandTemplate builtin_template();

/// Selection/duplication matrix M (P x V, one 1 per row) together with its
/// left inverse (duplicate averaging). Patch rows are grouped by bone and
/// sorted by ascending template vertex index inside each bone.
struct DecompositionSpec {
    int v_count = 0;
    int p_count = 0;
    std::array<int, kNumBones> per_bone_counts{};
    std::array<int, kNumBones + 1> bone_row_offset{};
    std::vector<int> patch_to_vertex;           // size P
    std::vector<std::vector<int>> vertex_rows;  // per vertex, its patch rows

    Mat dense_M() const;
    Mat dense_left_inverse() const;
};

/// Assigns each vertex to its max-weight bone and duplicates it into the
/// second-best bone when that weight reaches dup_threshold. Throws
/// TemplateError for an empty bone or a patch larger than the MLP output
/// width (100).
DecompositionSpec build_decomposition(const HandTemplate& tmpl, double dup_threshold);

/// The MANO-sized decomposition (991 patch rows over 778 vertices) with the
/// standard per-bone counts; vertex assignment is synthetic but valid.
DecompositionSpec mano_decomposition();

Mat decompose_mesh(const DecompositionSpec& spec, const Mat& V);   // M * V
Mat recover_mesh(const DecompositionSpec& spec, const Mat& P);     // left inverse * P

/// Adjoint of recover_mesh: routes a mesh-space gradient back to patch rows
/// (each duplicate receives its averaged share).
Mat mesh_grad_to_patches(const DecompositionSpec& spec, const Mat& dMesh);

struct Pose {
    Vec3 root_rot{0, 0, 0};
    Vec3 root_trans{0, 0, 0};
    std::array<Vec3, kNumBones> bone_rot{};  // Euler XYZ per bone, radians
};

struct BoneTransform {
    Mat R;   // 3x3
    Vec3 t;  // applied as x -> R*(x - rest_parent) + posed_parent
};

struct FKResult {
    Skeleton joints{};
    std::array<Mat, kNumBones> rot;          // global rotation per bone
    std::array<Vec3, kNumBones> rest_base;   // rest position of parent joint
    std::array<Vec3, kNumBones> posed_base;  // posed position of parent joint
};

/// Rigid chain transform from the root outward; bone lengths are preserved
/// exactly.
FKResult forward_kinematics(const KinematicTree& tree, const Skeleton& rest, const Pose& pose);

struct PoseLimits {
    double flexion_min = 0.0;               // radians
    double flexion_max = M_PI / 2.0;
    double abduction = 20.0 * M_PI / 180.0;  // +- at knuckle bones
    bool free_root = true;
    double root_trans_range = 0.0;           // +- mm per axis
};

Pose sample_pose(Rng& rng, const PoseLimits& limits);

/// Linear blend skinning of the template under the pose's bone transforms.
Mat lbs_mesh(const HandTemplate& tmpl, const KinematicTree& tree, const Pose& pose);
Mat lbs_mesh(const HandTemplate& tmpl, const KinematicTree& tree, const FKResult& fk);

/// Cameras on a ring of the given radius around look_at (elevation jittered
/// per seed), all aimed at look_at.
CameraRig make_rig(int n_views, double radius_mm, const Vec3& look_at, double focal_px,
                   int image_w, int image_h, uint64_t seed);

struct BoneFrame {
    Mat R;   // rows are the frame axes (world -> frame)
    Vec3 t;  // origin (the bone's child joint)
};

/// Local frame of bone k from parent A, child B and wrist O: origin at B,
/// x along B->A, y the Gram-Schmidt of B->O against x, z = x cross y.
/// Throws DegenerateError when the three points are collinear (palm bones).
BoneFrame bone_frame(const Skeleton& X, const KinematicTree& tree, int k);

/// Adds i.i.d. N(0, sigma_sq) noise to every coordinate (variance in mm^2).
Skeleton inject_noise(const Skeleton& X, double sigma_sq, uint64_t seed);

}  // namespace s2m
