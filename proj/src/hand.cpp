#include "s2m/hand.hpp"

#include <algorithm>
#include <cmath>

namespace s2m {

KinematicTree KinematicTree::standard() {
    KinematicTree t;
    t.parent[0] = -1;
    int b = 0;
    for (int f = 0; f < 5; ++f) {
        const int base = 1 + 4 * f;
        t.parent[base] = 0;
        t.bones[b++] = {0, base};
        for (int j = 1; j < 4; ++j) {
            t.parent[base + j] = base + j - 1;
            t.bones[b++] = {base + j - 1, base + j};
        }
    }
    return t;
}

int KinematicTree::bone_ending_at(int j) const {
    for (int k = 0; k < kNumBones; ++k)
        if (bones[k].second == j) return k;
    return -1;
}

std::vector<int> KinematicTree::bones_starting_at(int j) const {
    std::vector<int> out;
    for (int k = 0; k < kNumBones; ++k)
        if (bones[k].first == j) out.push_back(k);
    return out;
}

Mat bones_from_skeleton(const Skeleton& X, const KinematicTree& tree) {
    Mat B(kNumBones, 6);
    for (int k = 0; k < kNumBones; ++k) {
        const auto [p, c] = tree.bones[k];
        for (int i = 0; i < 3; ++i) {
            B(k, i) = X[p][i];
            B(k, 3 + i) = X[c][i];
        }
    }
    return B;
}

// ---- builtin template ----

static Skeleton builtin_rest_skeleton() {
    // Wrist at origin, fingers along +y, thumb angled out; units mm.
    Skeleton s{};
    auto set = [&](int j, double x, double y, double z) { s[j] = {x, y, z}; };
    set(0, 0, 0, 0);
    set(1, 28, 18, 6);    // thumb
    set(2, 47, 36, 10);
    set(3, 61, 50, 12);
    set(4, 72, 61, 13);
    set(5, 32, 78, 2);    // index
    set(6, 36, 116, 0);
    set(7, 38, 140, -1);
    set(8, 40, 160, -2);
    set(9, 10, 82, 0);    // middle
    set(10, 11, 127, -2);
    set(11, 12, 155, -3);
    set(12, 13, 179, -4);
    set(13, -10, 78, -1);  // ring
    set(14, -13, 119, -3);
    set(15, -15, 145, -4);
    set(16, -17, 166, -5);
    set(17, -28, 68, -2);  // pinky
    set(18, -33, 100, -4);
    set(19, -36, 120, -5);
    set(20, -38, 137, -6);
    return s;
}

// Orthonormal frame with first axis d.
static void bone_axes(const Vec3& d, Vec3& u, Vec3& w) {
    Vec3 ref = std::abs(d[2]) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    u = normalized(cross(ref, d));
    w = cross(d, u);
}

HandTemplate builtin_template() {
    HandTemplate t;
    t.rest_skeleton = builtin_rest_skeleton();
    const KinematicTree tree = KinematicTree::standard();

    // radius by position along the finger chain (0 = knuckle segment)
    const double radii[4] = {9.0, 6.5, 5.5, 4.5};
    const double ring_t[3] = {0.12, 0.5, 0.88};

    std::vector<std::array<double, 3>> verts;
    std::vector<std::array<double, 20>> weights;
    std::vector<std::array<int, 3>> faces;

    auto push_vertex = [&](const Vec3& pos, int bone_a, double w_a, int bone_b) {
        std::array<double, 20> w{};
        if (bone_b < 0) {
            w[bone_a] = 1.0;
        } else {
            w[bone_a] = w_a;
            w[bone_b] = 1.0 - w_a;
        }
        verts.push_back({pos[0], pos[1], pos[2]});
        weights.push_back(w);
    };

    for (int k = 0; k < kNumBones; ++k) {
        const auto [pj, cj] = tree.bones[k];
        const int chain = k % 4;
        const double r = radii[chain] * (tree.bones[k].first == 0 && k < 4 ? 1.2 : 1.0);
        const Vec3 a = t.rest_skeleton[pj];
        const Vec3 b = t.rest_skeleton[cj];
        const Vec3 d = normalized(sub(b, a));
        Vec3 u, w;
        bone_axes(d, u, w);

        const int parent_bone = tree.bone_ending_at(pj);  // -1 for palm bones
        const auto child_bones = tree.bones_starting_at(cj);
        const int child_bone = child_bones.empty() ? -1 : child_bones.front();

        const int base = static_cast<int>(verts.size());
        // proximal cap
        push_vertex(add(a, scale(d, -0.04 * norm3(sub(b, a)))), k, 0.7, parent_bone);
        // three rings of 8
        for (int ri = 0; ri < 3; ++ri) {
            const Vec3 c = add(a, scale(sub(b, a), ring_t[ri]));
            const double rr = (ri == 1) ? r : 0.85 * r;
            int blend = -1;
            if (ri == 0) blend = parent_bone;
            if (ri == 2) blend = child_bone;
            for (int j = 0; j < 8; ++j) {
                const double ang = 2.0 * M_PI * j / 8.0;
                const Vec3 pos = add(c, add(scale(u, rr * std::cos(ang)), scale(w, rr * std::sin(ang))));
                push_vertex(pos, k, blend >= 0 ? 0.7 : 1.0, blend);
            }
        }
        // distal cap
        push_vertex(add(b, scale(d, 0.04 * norm3(sub(b, a)))), k, 0.7, child_bone);

        // faces: cap fans + two ring bands
        const int cap_p = base, ring0 = base + 1, ring1 = base + 9, ring2 = base + 17;
        const int cap_c = base + 25;
        for (int j = 0; j < 8; ++j) {
            const int jn = (j + 1) % 8;
            faces.push_back({cap_p, ring0 + jn, ring0 + j});
            faces.push_back({ring0 + j, ring0 + jn, ring1 + j});
            faces.push_back({ring0 + jn, ring1 + jn, ring1 + j});
            faces.push_back({ring1 + j, ring1 + jn, ring2 + j});
            faces.push_back({ring1 + jn, ring2 + jn, ring2 + j});
            faces.push_back({cap_c, ring2 + j, ring2 + jn});
        }
    }

    const int V = static_cast<int>(verts.size());
    t.vertices.resize(V, 3);
    t.skin_weights.resize(V, kNumBones);
    for (int i = 0; i < V; ++i) {
        for (int c = 0; c < 3; ++c) t.vertices(i, c) = verts[i][c];
        for (int k = 0; k < kNumBones; ++k) t.skin_weights(i, k) = weights[i][k];
    }
    t.faces = std::move(faces);
    return t;
}

// ---- decomposition ----

static DecompositionSpec spec_from_assignments(int v_count,
                                               const std::vector<std::vector<int>>& bone_vertices) {
    DecompositionSpec spec;
    spec.v_count = v_count;
    spec.vertex_rows.assign(v_count, {});
    int row = 0;
    for (int k = 0; k < kNumBones; ++k) {
        auto verts = bone_vertices[k];
        std::sort(verts.begin(), verts.end());
        if (verts.empty())
            throw TemplateError("build_decomposition: bone " + std::to_string(k) + " has no vertices");
        if (static_cast<int>(verts.size()) > 100)
            throw TemplateError("build_decomposition: bone " + std::to_string(k) + " patch exceeds 100 vertices");
        spec.per_bone_counts[k] = static_cast<int>(verts.size());
        spec.bone_row_offset[k] = row;
        for (int v : verts) {
            spec.patch_to_vertex.push_back(v);
            spec.vertex_rows[v].push_back(row);
            ++row;
        }
    }
    spec.bone_row_offset[kNumBones] = row;
    spec.p_count = row;
    for (int v = 0; v < v_count; ++v)
        if (spec.vertex_rows[v].empty())
            throw TemplateError("build_decomposition: vertex " + std::to_string(v) + " not covered by any bone");
    return spec;
}

DecompositionSpec build_decomposition(const HandTemplate& tmpl, double dup_threshold) {
    const int V = tmpl.vertex_count();
    if (tmpl.skin_weights.rows != V || tmpl.skin_weights.cols != kNumBones)
        throw TemplateError("build_decomposition: skin weight shape mismatch");

    std::vector<std::vector<int>> bone_vertices(kNumBones);
    for (int v = 0; v < V; ++v) {
        int best = 0, second = -1;
        for (int k = 1; k < kNumBones; ++k)
            if (tmpl.skin_weights(v, k) > tmpl.skin_weights(v, best)) best = k;
        for (int k = 0; k < kNumBones; ++k) {
            if (k == best) continue;
            if (second < 0 || tmpl.skin_weights(v, k) > tmpl.skin_weights(v, second)) second = k;
        }
        bone_vertices[best].push_back(v);
        if (second >= 0 && tmpl.skin_weights(v, second) >= dup_threshold)
            bone_vertices[second].push_back(v);
    }
    return spec_from_assignments(V, bone_vertices);
}

DecompositionSpec mano_decomposition() {
    static const int counts[kNumBones] = {45, 61, 43, 45, 92, 34, 41, 62, 44, 44,
                                          58, 42, 40, 60, 41, 35, 64, 28, 50, 62};
    const int V = 778, P = 991;
    int total = 0;
    for (int c : counts) total += c;
    if (total != P) throw TemplateError("mano_decomposition: counts do not sum to 991");

    // Apportion the 213 duplicates proportionally (largest remainder), then
    // give each bone a contiguous primary block and borrow its duplicates
    // from the vertices just past the block.
    const int dup_total = P - V;
    int dup[kNumBones];
    double frac[kNumBones];
    int assigned = 0;
    for (int k = 0; k < kNumBones; ++k) {
        const double share = static_cast<double>(counts[k]) * dup_total / P;
        dup[k] = static_cast<int>(std::floor(share));
        frac[k] = share - dup[k];
        assigned += dup[k];
    }
    std::vector<int> order(kNumBones);
    for (int k = 0; k < kNumBones; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a < b;
    });
    for (int i = 0; assigned < dup_total; ++i, ++assigned) dup[order[i]] += 1;

    std::vector<std::vector<int>> bone_vertices(kNumBones);
    int offset = 0;
    std::array<int, kNumBones> primary_off{};
    for (int k = 0; k < kNumBones; ++k) {
        primary_off[k] = offset;
        const int primaries = counts[k] - dup[k];
        for (int j = 0; j < primaries; ++j) bone_vertices[k].push_back(offset + j);
        offset += primaries;
    }
    if (offset != V) throw TemplateError("mano_decomposition: primary blocks do not cover 778 vertices");
    for (int k = 0; k < kNumBones; ++k) {
        const int primaries = counts[k] - dup[k];
        for (int j = 0; j < dup[k]; ++j)
            bone_vertices[k].push_back((primary_off[k] + primaries + j) % V);
    }
    return spec_from_assignments(V, bone_vertices);
}

Mat DecompositionSpec::dense_M() const {
    Mat M(p_count, v_count);
    for (int r = 0; r < p_count; ++r) M(r, patch_to_vertex[r]) = 1.0;
    return M;
}

Mat DecompositionSpec::dense_left_inverse() const {
    Mat L(v_count, p_count);
    for (int v = 0; v < v_count; ++v) {
        const double w = 1.0 / static_cast<double>(vertex_rows[v].size());
        for (int r : vertex_rows[v]) L(v, r) = w;
    }
    return L;
}

Mat decompose_mesh(const DecompositionSpec& spec, const Mat& V) {
    if (V.rows != spec.v_count) throw DimensionError("decompose_mesh: vertex count mismatch");
    Mat P(spec.p_count, V.cols);
    for (int r = 0; r < spec.p_count; ++r) {
        const double* src = V.row(spec.patch_to_vertex[r]);
        std::copy(src, src + V.cols, P.row(r));
    }
    return P;
}

Mat recover_mesh(const DecompositionSpec& spec, const Mat& P) {
    if (P.rows != spec.p_count) throw DimensionError("recover_mesh: patch row count mismatch");
    Mat V(spec.v_count, P.cols, 0.0);
    for (int v = 0; v < spec.v_count; ++v) {
        const double w = 1.0 / static_cast<double>(spec.vertex_rows[v].size());
        double* dst = V.row(v);
        for (int r : spec.vertex_rows[v]) axpy(w, P.row(r), dst, P.cols);
    }
    return V;
}

Mat mesh_grad_to_patches(const DecompositionSpec& spec, const Mat& dMesh) {
    if (dMesh.rows != spec.v_count) throw DimensionError("mesh_grad_to_patches: vertex count mismatch");
    Mat dP(spec.p_count, dMesh.cols, 0.0);
    for (int v = 0; v < spec.v_count; ++v) {
        const double w = 1.0 / static_cast<double>(spec.vertex_rows[v].size());
        for (int r : spec.vertex_rows[v])
            for (int c = 0; c < dMesh.cols; ++c) dP(r, c) = w * dMesh(v, c);
    }
    return dP;
}

// ---- kinematics ----

FKResult forward_kinematics(const KinematicTree& tree, const Skeleton& rest, const Pose& pose) {
    FKResult fk;
    const Mat root_R = euler_xyz(pose.root_rot);
    fk.joints[0] = add(rest[0], pose.root_trans);

    // bones are ordered proximal-to-distal within each finger, so a single
    // pass resolves parents before children
    std::array<Mat, kNumBones> global_R;
    for (int k = 0; k < kNumBones; ++k) {
        const auto [pj, cj] = tree.bones[k];
        const int pb = tree.bone_ending_at(pj);
        const Mat parent_R = (pb < 0) ? root_R : global_R[pb];
        global_R[k] = matmul(parent_R, euler_xyz(pose.bone_rot[k]));
        fk.joints[cj] = add(fk.joints[pj], rotate(global_R[k], sub(rest[cj], rest[pj])));
        fk.rot[k] = global_R[k];
        fk.rest_base[k] = rest[pj];
        fk.posed_base[k] = fk.joints[pj];
    }
    return fk;
}

Pose sample_pose(Rng& rng, const PoseLimits& limits) {
    Pose pose;
    if (limits.free_root) {
        pose.root_rot = {rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI),
                         rng.uniform(-M_PI, M_PI)};
    }
    if (limits.root_trans_range > 0.0) {
        for (int i = 0; i < 3; ++i)
            pose.root_trans[i] = rng.uniform(-limits.root_trans_range, limits.root_trans_range);
    }
    for (int k = 0; k < kNumBones; ++k) {
        const int chain = k % 4;
        if (chain == 0) continue;  // metacarpals stay rigid in the palm
        const double flex = rng.uniform(limits.flexion_min, limits.flexion_max);
        const double abd = (chain == 1) ? rng.uniform(-limits.abduction, limits.abduction) : 0.0;
        pose.bone_rot[k] = {flex, 0.0, abd};
    }
    return pose;
}

Mat lbs_mesh(const HandTemplate& tmpl, const KinematicTree&, const FKResult& fk) {
    const int V = tmpl.vertex_count();
    // per-bone affine form moved = R x + t, t = posed_base - R * rest_base
    std::array<Vec3, kNumBones> trans;
    for (int k = 0; k < kNumBones; ++k)
        trans[k] = sub(fk.posed_base[k], rotate(fk.rot[k], fk.rest_base[k]));

    // delta form keeps the identity pose exact: v' = v + sum_k w_k (moved_k - v);
    // single-bone vertices take the rigid transform directly
    Mat out(V, 3, 0.0);
    for (int v = 0; v < V; ++v) {
        const Vec3 x = {tmpl.vertices(v, 0), tmpl.vertices(v, 1), tmpl.vertices(v, 2)};
        Vec3 acc = x;
        for (int k = 0; k < kNumBones; ++k) {
            const double w = tmpl.skin_weights(v, k);
            if (w == 0.0) continue;
            const Vec3 moved = add(rotate(fk.rot[k], x), trans[k]);
            if (w == 1.0) {
                acc = moved;
                break;
            }
            acc = add(acc, scale(sub(moved, x), w));
        }
        for (int c = 0; c < 3; ++c) out(v, c) = acc[c];
    }
    return out;
}

Mat lbs_mesh(const HandTemplate& tmpl, const KinematicTree& tree, const Pose& pose) {
    return lbs_mesh(tmpl, tree, forward_kinematics(tree, tmpl.rest_skeleton, pose));
}

// ---- rig ----

CameraRig make_rig(int n_views, double radius_mm, const Vec3& look_at, double focal_px,
                   int image_w, int image_h, uint64_t seed) {
    if (n_views < 2) throw DimensionError("make_rig: need at least 2 views");
    CameraRig rig;
    Rng rng(Rng::derive(seed, 0x7269u));  // 'ri'
    for (int n = 0; n < n_views; ++n) {
        const double az = 2.0 * M_PI * n / n_views;
        const double el = rng.uniform(-25.0, 25.0) * M_PI / 180.0;
        const Vec3 dir = {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
        const Vec3 c = add(look_at, scale(dir, radius_mm));

        const Vec3 z = normalized(sub(look_at, c));  // optical axis
        Vec3 up = {0, 0, 1};
        if (std::abs(dot3(up, z)) > 0.99) up = {0, 1, 0};
        const Vec3 x = normalized(cross(up, z));
        const Vec3 y = cross(z, x);

        CameraView view;
        view.width = image_w;
        view.height = image_h;
        view.K.resize(3, 3);
        view.K(0, 0) = focal_px;
        view.K(1, 1) = focal_px;
        view.K(0, 2) = (image_w - 1) / 2.0;
        view.K(1, 2) = (image_h - 1) / 2.0;
        view.K(2, 2) = 1.0;
        view.T.resize(4, 4);
        const Vec3 axes[3] = {x, y, z};
        for (int r = 0; r < 3; ++r) {
            for (int cidx = 0; cidx < 3; ++cidx) view.T(r, cidx) = axes[r][cidx];
            view.T(r, 3) = -dot3(axes[r], c);
        }
        view.T(3, 3) = 1.0;
        rig.views.push_back(std::move(view));
    }
    return rig;
}

// ---- diagnostics ----

BoneFrame bone_frame(const Skeleton& X, const KinematicTree& tree, int k) {
    if (k < 0 || k >= kNumBones) throw DimensionError("bone_frame: bone index out of range");
    const auto [pj, cj] = tree.bones[k];
    const Vec3 A = X[pj], B = X[cj], O = X[tree.root()];

    const Vec3 ba = sub(A, B);
    const Vec3 bo = sub(O, B);
    const double na = norm3(ba), no = norm3(bo);
    if (na < 1e-12 || no < 1e-12)
        throw DegenerateError("bone_frame: coincident points for bone " + std::to_string(k));
    const Vec3 xa = scale(ba, 1.0 / na);
    Vec3 y = sub(bo, scale(xa, dot3(bo, xa)));
    const double ny = norm3(y);
    if (ny < 1e-9 * no)
        throw DegenerateError("bone_frame: collinear points for bone " + std::to_string(k));
    y = scale(y, 1.0 / ny);
    const Vec3 z = cross(xa, y);

    BoneFrame f;
    f.R.resize(3, 3);
    for (int c = 0; c < 3; ++c) {
        f.R(0, c) = xa[c];
        f.R(1, c) = y[c];
        f.R(2, c) = z[c];
    }
    f.t = B;
    return f;
}

Skeleton inject_noise(const Skeleton& X, double sigma_sq, uint64_t seed) {
    if (sigma_sq < 0.0) throw DimensionError("inject_noise: variance must be nonnegative");
    Skeleton out = X;
    if (sigma_sq == 0.0) return out;
    Rng rng(Rng::derive(seed, 0x6e6fu));  // 'no'
    const double sigma = std::sqrt(sigma_sq);
    for (auto& j : out)
        for (auto& c : j) c += sigma * rng.normal();
    return out;
}

}  // namespace s2m
