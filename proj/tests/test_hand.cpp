#include <cmath>

#include "doctest.h"
#include "s2m/hand.hpp"

using namespace s2m;

TEST_CASE("kinematic tree shape") {
    const KinematicTree t = KinematicTree::standard();
    CHECK(t.parent[0] == -1);
    int roots = 0;
    for (int j = 0; j < kNumJoints; ++j)
        if (t.parent[j] < 0) ++roots;
    CHECK(roots == 1);
    // every non-root joint is the child of exactly one bone
    for (int j = 1; j < kNumJoints; ++j) {
        int count = 0;
        for (int k = 0; k < kNumBones; ++k)
            if (t.bones[k].second == j) ++count;
        CHECK(count == 1);
    }
}

TEST_CASE("bones_from_skeleton basics") {
    const KinematicTree t = KinematicTree::standard();
    Skeleton zero{};
    const Mat b0 = bones_from_skeleton(zero, t);
    for (const double v : b0.a) CHECK(v == 0.0);

    const HandTemplate tmpl = builtin_template();
    const Mat b = bones_from_skeleton(tmpl.rest_skeleton, t);
    for (int k = 0; k < kNumBones; ++k) {
        const auto [p, c] = t.bones[k];
        for (int i = 0; i < 3; ++i) {
            CHECK(b(k, i) == tmpl.rest_skeleton[p][i]);
            CHECK(b(k, 3 + i) == tmpl.rest_skeleton[c][i]);
        }
    }

    // translation adds (t, t) to every row
    Skeleton moved = tmpl.rest_skeleton;
    for (auto& j : moved) j = add(j, {10, -5, 3});
    const Mat bm = bones_from_skeleton(moved, t);
    for (int k = 0; k < kNumBones; ++k) {
        CHECK(bm(k, 0) == doctest::Approx(b(k, 0) + 10));
        CHECK(bm(k, 4) == doctest::Approx(b(k, 4) - 5));
        CHECK(bm(k, 5) == doctest::Approx(b(k, 5) + 3));
    }
}

TEST_CASE("builtin template invariants") {
    const HandTemplate t = builtin_template();
    CHECK(t.vertex_count() == 520);
    // skin weight rows sum to 1
    for (int v = 0; v < t.vertex_count(); ++v) {
        double s = 0;
        for (int k = 0; k < kNumBones; ++k) {
            s += t.skin_weights(v, k);
            CHECK(t.skin_weights(v, k) >= 0.0);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    // faces index valid vertices
    for (const auto& f : t.faces)
        for (int idx : f) {
            CHECK(idx >= 0);
            CHECK(idx < t.vertex_count());
        }
    // hand scale: wrist to middle fingertip about 180 mm
    const double reach = norm3(sub(t.rest_skeleton[12], t.rest_skeleton[0]));
    CHECK(reach > 160.0);
    CHECK(reach < 200.0);
}

TEST_CASE("decomposition without duplication is a permutation-like selection") {
    const HandTemplate t = builtin_template();
    const DecompositionSpec spec = build_decomposition(t, 1.1);  // threshold above any weight
    CHECK(spec.p_count == spec.v_count);
    const Mat LM = matmul(spec.dense_left_inverse(), spec.dense_M());
    for (int i = 0; i < spec.v_count; ++i)
        for (int j = 0; j < spec.v_count; ++j) CHECK(LM(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("builtin decomposition matches the golden per-bone counts") {
    const HandTemplate t = builtin_template();
    const DecompositionSpec spec = build_decomposition(t, 0.3);
    // golden: per finger (palm, proximal, middle, tip) = (35, 44, 44, 35)
    for (int f = 0; f < 5; ++f) {
        CHECK(spec.per_bone_counts[4 * f + 0] == 35);
        CHECK(spec.per_bone_counts[4 * f + 1] == 44);
        CHECK(spec.per_bone_counts[4 * f + 2] == 44);
        CHECK(spec.per_bone_counts[4 * f + 3] == 35);
    }
    CHECK(spec.p_count == 790);

    const Mat LM = matmul(spec.dense_left_inverse(), spec.dense_M());
    for (int i = 0; i < spec.v_count; ++i)
        for (int j = 0; j < spec.v_count; ++j)
            CHECK(std::abs(LM(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("mano-sized decomposition reproduces the expected counts") {
    const DecompositionSpec spec = mano_decomposition();
    const int expected[kNumBones] = {45, 61, 43, 45, 92, 34, 41, 62, 44, 44,
                                     58, 42, 40, 60, 41, 35, 64, 28, 50, 62};
    int sum = 0;
    for (int k = 0; k < kNumBones; ++k) {
        CHECK(spec.per_bone_counts[k] == expected[k]);
        sum += spec.per_bone_counts[k];
    }
    CHECK(sum == 991);
    CHECK(spec.v_count == 778);
    CHECK(spec.p_count == 991);

    const Mat LM = matmul(spec.dense_left_inverse(), spec.dense_M());
    for (int i = 0; i < spec.v_count; ++i)
        for (int j = 0; j < spec.v_count; ++j)
            CHECK(std::abs(LM(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("decompose / recover round trip and duplicate averaging") {
    const HandTemplate t = builtin_template();
    const DecompositionSpec spec = build_decomposition(t, 0.3);
    Rng rng(5);
    Mat V(spec.v_count, 3);
    for (auto& x : V.a) x = rng.uniform(-100, 100);
    const Mat P = decompose_mesh(spec, V);
    const Mat R = recover_mesh(spec, P);
    for (size_t i = 0; i < V.a.size(); ++i) CHECK(std::abs(R.a[i] - V.a[i]) < 1e-12);

    // perturb one duplicated vertex differently in its two patch rows
    int dup_vertex = -1;
    for (int v = 0; v < spec.v_count; ++v)
        if (spec.vertex_rows[v].size() == 2) {
            dup_vertex = v;
            break;
        }
    REQUIRE(dup_vertex >= 0);
    Mat P2 = P;
    P2(spec.vertex_rows[dup_vertex][0], 0) += 1.0;
    P2(spec.vertex_rows[dup_vertex][1], 0) += 3.0;
    const Mat R2 = recover_mesh(spec, P2);
    CHECK(R2(dup_vertex, 0) == doctest::Approx(V(dup_vertex, 0) + 2.0));

    // zero mesh round trip
    Mat Z(spec.v_count, 3, 0.0);
    const Mat PZ = decompose_mesh(spec, Z);
    for (double x : PZ.a) CHECK(x == 0.0);
}

TEST_CASE("forward kinematics: identity, global rotation, rigidity") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();

    Pose identity;
    const FKResult fk = forward_kinematics(tree, t.rest_skeleton, identity);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) CHECK(fk.joints[j][c] == t.rest_skeleton[j][c]);

    Pose global;
    global.root_rot = {0.3, -0.7, 1.1};
    const Mat R = euler_xyz(global.root_rot);
    const FKResult fg = forward_kinematics(tree, t.rest_skeleton, global);
    for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 expect = rotate(R, t.rest_skeleton[j]);
        for (int c = 0; c < 3; ++c) CHECK(fg.joints[j][c] == doctest::Approx(expect[c]).epsilon(1e-12));
    }

    Rng rng(7);
    PoseLimits limits;
    for (int trial = 0; trial < 5; ++trial) {
        const Pose p = sample_pose(rng, limits);
        const FKResult f = forward_kinematics(tree, t.rest_skeleton, p);
        for (int k = 0; k < kNumBones; ++k) {
            const auto [pj, cj] = tree.bones[k];
            const double rest_len = norm3(sub(t.rest_skeleton[cj], t.rest_skeleton[pj]));
            const double posed_len = norm3(sub(f.joints[cj], f.joints[pj]));
            CHECK(std::abs(posed_len - rest_len) / rest_len < 1e-9);
        }
    }
}

TEST_CASE("sample_pose determinism and limits") {
    PoseLimits limits;
    Rng a(42), b(42);
    const Pose pa = sample_pose(a, limits);
    const Pose pb = sample_pose(b, limits);
    for (int k = 0; k < kNumBones; ++k)
        for (int c = 0; c < 3; ++c) CHECK(pa.bone_rot[k][c] == pb.bone_rot[k][c]);

    PoseLimits zero;
    zero.flexion_min = zero.flexion_max = 0.0;
    zero.abduction = 0.0;
    zero.free_root = false;
    Rng c(1);
    const Pose pz = sample_pose(c, zero);
    for (int k = 0; k < kNumBones; ++k)
        for (int q = 0; q < 3; ++q) CHECK(pz.bone_rot[k][q] == 0.0);
    CHECK(pz.root_rot[0] == 0.0);

    // empirical ranges stay within limits
    Rng d(9);
    for (int t = 0; t < 10000; ++t) {
        const Pose p = sample_pose(d, limits);
        for (int k = 0; k < kNumBones; ++k) {
            CHECK(p.bone_rot[k][0] >= limits.flexion_min - 1e-12);
            CHECK(p.bone_rot[k][0] <= limits.flexion_max + 1e-12);
            CHECK(std::abs(p.bone_rot[k][2]) <= limits.abduction + 1e-12);
        }
    }
}

TEST_CASE("lbs: identity bit-exact, single-bone rigid, global rigid") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();

    Pose identity;
    const Mat mesh = lbs_mesh(t, tree, identity);
    for (size_t i = 0; i < mesh.a.size(); ++i) CHECK(mesh.a[i] == t.vertices.a[i]);

    // a full-weight vertex moves rigidly with its bone
    Rng rng(3);
    PoseLimits limits;
    const Pose pose = sample_pose(rng, limits);
    const FKResult fk = forward_kinematics(tree, t.rest_skeleton, pose);
    const Mat posed = lbs_mesh(t, tree, fk);
    int checked = 0;
    for (int v = 0; v < t.vertex_count() && checked < 10; ++v) {
        int bone = -1;
        for (int k = 0; k < kNumBones; ++k)
            if (t.skin_weights(v, k) == 1.0) bone = k;
        if (bone < 0) continue;
        const Vec3 x = {t.vertices(v, 0), t.vertices(v, 1), t.vertices(v, 2)};
        const Vec3 expect =
            add(rotate(fk.rot[bone], sub(x, fk.rest_base[bone])), fk.posed_base[bone]);
        for (int c = 0; c < 3; ++c) CHECK(posed(v, c) == doctest::Approx(expect[c]).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked == 10);

    // global rigid pose transforms the whole mesh rigidly
    Pose global;
    global.root_rot = {0.5, 0.2, -0.9};
    global.root_trans = {12, -7, 30};
    const Mat gmesh = lbs_mesh(t, tree, global);
    const Mat R = euler_xyz(global.root_rot);
    for (int v = 0; v < t.vertex_count(); ++v) {
        const Vec3 x = {t.vertices(v, 0), t.vertices(v, 1), t.vertices(v, 2)};
        const Vec3 expect = add(rotate(R, x), global.root_trans);
        for (int c = 0; c < 3; ++c) CHECK(gmesh(v, c) == doctest::Approx(expect[c]).epsilon(1e-9));
    }
}

TEST_CASE("make_rig geometry and determinism") {
    const Vec3 look = {5, -3, 10};
    const CameraRig rig = make_rig(8, 400.0, look, 240.0, 256, 256, 77);
    CHECK(rig.size() == 8);
    for (int n = 0; n < 8; ++n) {
        const Vec2 uv = project_point(rig.views[n], look);
        CHECK(std::abs(uv[0] - rig.views[n].K(0, 2)) < 1e-9);
        CHECK(std::abs(uv[1] - rig.views[n].K(1, 2)) < 1e-9);
        CHECK(norm3(sub(rig.views[n].center(), look)) == doctest::Approx(400.0).epsilon(1e-9));
        // rotation block orthonormal, det +1
        Mat R(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) R(i, j) = rig.views[n].T(i, j);
        const Mat I = matmul(transpose(R), R);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(I(i, j) == doctest::Approx(i == j ? 1 : 0).epsilon(1e-12));
    }
    // distinct centers
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j)
            CHECK(norm3(sub(rig.views[i].center(), rig.views[j].center())) > 1.0);

    const CameraRig rig2 = make_rig(8, 400.0, look, 240.0, 256, 256, 77);
    for (int n = 0; n < 8; ++n)
        for (size_t i = 0; i < rig.views[n].T.a.size(); ++i)
            CHECK(rig.views[n].T.a[i] == rig2.views[n].T.a[i]);

    CHECK_THROWS_AS(make_rig(1, 400, look, 240, 256, 256, 0), DimensionError);
}

TEST_CASE("bone_frame axes and degeneracy") {
    const KinematicTree tree = KinematicTree::standard();
    // synthetic skeleton: bone 1 = (joint1 -> joint2); A = joint1, B = joint2, O = wrist
    Skeleton X{};
    X[0] = {0, 1, 0};   // wrist
    X[1] = {1, 0, 0};   // A
    X[2] = {0, 0, 0};   // B (origin)
    const BoneFrame f = bone_frame(X, tree, 1);
    CHECK(f.R(0, 0) == doctest::Approx(1.0));
    CHECK(f.R(0, 1) == doctest::Approx(0.0));
    CHECK(f.R(1, 1) == doctest::Approx(1.0));
    CHECK(f.R(2, 2) == doctest::Approx(1.0));
    for (int c = 0; c < 3; ++c) CHECK(f.t[c] == 0.0);

    // orthonormal, det +1 on a real skeleton
    const HandTemplate t = builtin_template();
    for (int k : {1, 2, 3, 5, 9, 19}) {
        const BoneFrame bf = bone_frame(t.rest_skeleton, tree, k);
        const Mat I = matmul(bf.R, transpose(bf.R));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(std::abs(I(i, j) - (i == j ? 1 : 0)) < 1e-12);
        const Mat& R = bf.R;
        const double det = R(0, 0) * (R(1, 1) * R(2, 2) - R(1, 2) * R(2, 1)) -
                           R(0, 1) * (R(1, 0) * R(2, 2) - R(1, 2) * R(2, 0)) +
                           R(0, 2) * (R(1, 0) * R(2, 1) - R(1, 1) * R(2, 0));
        CHECK(std::abs(det - 1.0) < 1e-12);
    }

    // palm bones are degenerate: A (parent) is the wrist O itself
    CHECK_THROWS_AS(bone_frame(t.rest_skeleton, tree, 0), DegenerateError);

    // rigidly transforming the skeleton transforms the frame the same way
    Rng rng(13);
    const Mat R = euler_xyz({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const Vec3 tr = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    Skeleton moved{};
    for (int j = 0; j < kNumJoints; ++j) moved[j] = add(rotate(R, t.rest_skeleton[j]), tr);
    const BoneFrame a = bone_frame(t.rest_skeleton, tree, 5);
    const BoneFrame b = bone_frame(moved, tree, 5);
    // axes are rows: expect b.R = a.R * R^T and b.t = R a.t + tr
    const Mat expect_R = matmul(a.R, transpose(R));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(b.R(i, j) == doctest::Approx(expect_R(i, j)).epsilon(1e-9));
    const Vec3 expect_t = add(rotate(R, a.t), tr);
    for (int c = 0; c < 3; ++c) CHECK(b.t[c] == doctest::Approx(expect_t[c]).epsilon(1e-9));
}

TEST_CASE("inject_noise statistics match the analytic mean displacement") {
    const HandTemplate t = builtin_template();

    const Skeleton same = inject_noise(t.rest_skeleton, 0.0, 1);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) CHECK(same[j][c] == t.rest_skeleton[j][c]);

    for (double sigma_sq : {5.0, 20.0}) {
        double total = 0.0;
        int count = 0;
        for (int trial = 0; trial < 600; ++trial) {
            const Skeleton noisy = inject_noise(t.rest_skeleton, sigma_sq, 1000 + trial);
            for (int j = 0; j < kNumJoints; ++j) {
                total += norm3(sub(noisy[j], t.rest_skeleton[j]));
                ++count;
            }
        }
        const double mean = total / count;
        const double expect = 2.0 * std::sqrt(sigma_sq) * std::sqrt(2.0 / M_PI);
        CHECK(std::abs(mean - expect) / expect < 0.02);
    }
}
