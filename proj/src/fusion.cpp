#include "s2m/fusion.hpp"

#include <cmath>

namespace s2m {

Mat gather_keypoint_features(const std::vector<FeatureMap>& maps, const Skeleton& xbar,
                             const CameraRig& rig, int heatmap_down) {
    const int N = rig.size();
    if (static_cast<int>(maps.size()) != N)
        throw DimensionError("gather_keypoint_features: map count != view count");
    if (N < 2) throw DimensionError("gather_keypoint_features: need at least 2 views");
    const int C = maps[0].channels;
    const double inv_down = 1.0 / heatmap_down;

    Mat gk(kNumJoints, N * C, 0.0);
    for (int n = 0; n < N; ++n) {
        const CameraView& view = rig.views[n];
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec3 pc = view.to_camera(xbar[j]);
            if (pc[2] <= 0.0) continue;  // behind camera: zero block
            const Vec2 uv = project_point(view, xbar[j]);
            grid_sample(maps[n], {uv[0] * inv_down, uv[1] * inv_down}, gk.row(j) + n * C);
        }
    }
    return gk;
}

Mat bone_concat(const Mat& gk, const KinematicTree& tree) {
    const int nc = gk.cols;
    Mat gb(kNumBones, 2 * nc);
    for (int k = 0; k < kNumBones; ++k) {
        const auto [pj, cj] = tree.bones[k];
        std::copy(gk.row(pj), gk.row(pj) + nc, gb.row(k));
        std::copy(gk.row(cj), gk.row(cj) + nc, gb.row(k) + nc);
    }
    return gb;
}

BoneFeatureSet gather_bone_features(const std::vector<FeatureMap>& maps, const Skeleton& xbar,
                                    const CameraRig& rig, const KinematicTree& tree,
                                    int heatmap_down) {
    BoneFeatureSet out;
    out.gk = gather_keypoint_features(maps, xbar, rig, heatmap_down);
    out.gb = bone_concat(out.gk, tree);
    return out;
}

ParamSet MGFPModel::trainable_params() {
    ParamSet ps;
    const char* ax = "xyz";
    for (int i = 0; i < 3; ++i) {
        collect_params(mfi.copy[i], std::string("mfi.copy_") + ax[i], ps);
        for (size_t j = 0; j < mfi.zero[i].size(); ++j) {
            Layer& l = mfi.zero[i][j];
            const std::string base =
                std::string("mfi.zero_") + ax[i] + "." + std::to_string(j);
            ps.push_back({base + ".w", l.W.a.data(), l.W.a.size()});
            ps.push_back({base + ".b", l.b.data(), l.b.size()});
        }
    }
    return ps;
}

MGFPModel make_mgfp(const S2MModel& trained, int n_views, int channels) {
    MGFPModel m;
    m.locked = trained;
    m.n_views = n_views;
    m.channels = channels;
    for (int i = 0; i < 3; ++i) {
        m.mfi.copy[i] = trained.axis[i];
        const auto& layers = trained.axis[i].layers;
        m.mfi.zero[i].clear();
        m.mfi.zero[i].push_back(make_zero_stack(m.gb_dim(), layers.front().in()).layers[0]);
        for (const auto& l : layers)
            m.mfi.zero[i].push_back(make_zero_stack(l.out(), l.out()).layers[0]);
    }
    return m;
}

void MFIGrads::init(const MGFPModel& m) {
    for (int i = 0; i < 3; ++i) {
        copy[i].init(m.mfi.copy[i]);
        zero[i].resize(m.mfi.zero[i].size());
        for (size_t j = 0; j < m.mfi.zero[i].size(); ++j) {
            const Layer& l = m.mfi.zero[i][j];
            zero[i][j].dW.resize(l.out(), l.in());
            zero[i][j].db.assign(l.out(), 0.0);
        }
    }
}

void MFIGrads::zero_all() {
    for (int i = 0; i < 3; ++i) {
        copy[i].zero();
        for (auto& g : zero[i]) {
            g.dW.zero();
            std::fill(g.db.begin(), g.db.end(), 0.0);
        }
    }
}

void MFIGrads::scale_all(double f) {
    for (int i = 0; i < 3; ++i) {
        copy[i].scale_all(f);
        for (auto& g : zero[i]) {
            for (auto& v : g.dW.a) v *= f;
            for (auto& v : g.db) v *= f;
        }
    }
}

ParamSet MFIGrads::refs(MGFPModel& m) {
    ParamSet ps;
    const char* ax = "xyz";
    for (int i = 0; i < 3; ++i) {
        collect_grads(copy[i], m.mfi.copy[i], std::string("mfi.copy_") + ax[i], ps);
        for (size_t j = 0; j < zero[i].size(); ++j) {
            const std::string base =
                std::string("mfi.zero_") + ax[i] + "." + std::to_string(j);
            ps.push_back({base + ".w", zero[i][j].dW.a.data(), zero[i][j].dW.a.size()});
            ps.push_back({base + ".b", zero[i][j].db.data(), zero[i][j].db.size()});
        }
    }
    return ps;
}

S2MOut mfi_forward(const MGFPModel& m, const Skeleton& xbar, const Mat& gb, MFICache* cache) {
    if (gb.rows != kNumBones || gb.cols != m.gb_dim())
        throw DimensionError("mfi_forward: feature matrix must be 20 x 2NC");

    const S2MModel& locked = m.locked;
    Mat oe_rows = order_encode_batch(locked, &xbar, 1, nullptr);
    const int depth = locked.axis[0].depth();

    S2MOut out;
    std::array<Mat, 3> e_final;
    for (int i = 0; i < 3; ++i) {
        MFICache::Axis* ac = cache ? &cache->ax[i] : nullptr;
        if (ac) {
            ac->copy_x.assign(depth, Mat());
            ac->copy_z.assign(depth, Mat());
            ac->copy_y.assign(depth, Mat());
            ac->lock_x.assign(depth, Mat());
            ac->lock_z.assign(depth, Mat());
        }

        // feature chain seed
        Mat z;
        {
            const Layer& z0 = m.mfi.zero[i][0];
            Mat zp;
            layer_forward(z0, gb, zp, z);
            if (ac) ac->z0 = z;
        }
        Mat e = oe_rows;
        Mat c, cpre, lpre, l, zj;
        for (int j = 0; j < depth; ++j) {
            const Layer& copy_l = m.mfi.copy[i].layers[j];
            const Layer& lock_l = locked.axis[i].layers[j];
            const Layer& zero_l = m.mfi.zero[i][j + 1];

            if (ac) ac->copy_x[j] = z;
            layer_forward(copy_l, z, cpre, c);
            if (ac) {
                ac->copy_z[j] = cpre;
                ac->copy_y[j] = c;
            }
            Mat zjpre;
            layer_forward(zero_l, c, zjpre, zj);

            if (ac) ac->lock_x[j] = e;
            layer_forward(lock_l, e, lpre, l);
            if (ac) ac->lock_z[j] = lpre;

            // e_j = z_j + locked_j(e_{j-1})
            e.resize(l.rows, l.cols);
            for (size_t t = 0; t < l.a.size(); ++t) e.a[t] = zj.a[t] + l.a[t];
            z = zj;
        }
        e_final[i] = e;
        if (ac) ac->e_out = e;
    }

    const auto& spec = locked.spec;
    out.patches.resize(spec.p_count, 3);
    std::vector<Vec3> midpoints(kNumBones);
    for (int k = 0; k < kNumBones; ++k) {
        const auto [pj, cj] = locked.tree.bones[k];
        const Vec3 mid = scale(add(xbar[pj], xbar[cj]), 0.5);
        midpoints[k] = mid;
        const int off = spec.bone_row_offset[k];
        for (int j = 0; j < spec.per_bone_counts[k]; ++j) {
            double* row = out.patches.row(off + j);
            row[0] = mid[0] + locked.cfg.pe.pre_scale * e_final[0](k, j);
            row[1] = mid[1] + locked.cfg.pe.pre_scale * e_final[1](k, j);
            row[2] = mid[2] + locked.cfg.pe.pre_scale * e_final[2](k, j);
        }
    }
    out.mesh = recover_mesh(spec, out.patches);
    if (cache) {
        cache->oe_rows = std::move(oe_rows);
        cache->gb = gb;
        cache->midpoints = std::move(midpoints);
    }
    return out;
}

void mfi_backward(const MGFPModel& m, const MFICache& cache, const Mat& dPatches, MFIGrads& g) {
    const S2MModel& locked = m.locked;
    const auto& spec = locked.spec;
    const int depth = locked.axis[0].depth();
    if (dPatches.rows != spec.p_count || dPatches.cols != 3)
        throw DimensionError("mfi_backward: dPatches shape mismatch");

    for (int i = 0; i < 3; ++i) {
        const MFICache::Axis& ac = cache.ax[i];
        const int out_w = locked.cfg.out_width;
        Mat de(kNumBones, out_w, 0.0);
        for (int k = 0; k < kNumBones; ++k) {
            const int off = spec.bone_row_offset[k];
            for (int j = 0; j < spec.per_bone_counts[k]; ++j)
                de(k, j) = locked.cfg.pe.pre_scale * dPatches(off + j, i);
        }

        Mat dz_carry;  // gradient flowing into z_{j-1} via the copy chain
        for (int j = depth - 1; j >= 0; --j) {
            const Layer& copy_l = m.mfi.copy[i].layers[j];
            const Layer& lock_l = locked.axis[i].layers[j];
            const Layer& zero_l = m.mfi.zero[i][j + 1];

            // dz_j = de_j (+ carry from the copy chain above)
            Mat dzj = de;
            if (dz_carry.rows > 0)
                for (size_t t = 0; t < dzj.a.size(); ++t) dzj.a[t] += dz_carry.a[t];

            // through Z_{j+1}: input was copy_y[j]
            Mat dc(kNumBones, zero_l.in(), 0.0);
            layer_backward(zero_l, ac.copy_y[j], Mat(), dzj, &g.zero[i][j + 1], &dc);

            // through the copy layer: input was copy_x[j] (= z_{j-1})
            Mat dzprev(kNumBones, copy_l.in(), 0.0);
            layer_backward(copy_l, ac.copy_x[j], ac.copy_z[j], dc, &g.copy[i].layers[j], &dzprev);
            dz_carry = std::move(dzprev);

            // through the locked layer: input gradient only
            Mat deprev(kNumBones, lock_l.in(), 0.0);
            layer_backward(lock_l, ac.lock_x[j], ac.lock_z[j], de, nullptr, &deprev);
            de = std::move(deprev);
        }
        // dz_0 -> Z_0 (input gradient not needed)
        layer_backward(m.mfi.zero[i][0], cache.gb, Mat(), dz_carry, &g.zero[i][0], nullptr);
    }
}

// ---- stage-2 loss ----

static bool project_checked(const CameraView& view, const Vec3& X, Vec2& uv,
                            double duv[2][3]) {
    const Vec3 pc = view.to_camera(X);
    if (pc[2] <= 0.0) return false;
    project_point_grad(view, X, uv, duv);
    return true;
}

Stage2Terms stage2_loss(const Mat& pred_mesh, const Skeleton& xbar, const Mat& gt_mesh,
                        const Skeleton& gt_skeleton, const CameraRig& rig, const LossWeights& w,
                        Mat* dMesh) {
    if (!pred_mesh.same_shape(gt_mesh)) throw DimensionError("stage2_loss: mesh shape mismatch");
    const int V = pred_mesh.rows;
    const int N = rig.size();
    Stage2Terms t;
    if (dMesh) {
        if (!dMesh->same_shape(pred_mesh)) dMesh->resize(V, 3);
        dMesh->zero();
    }

    // vertex 3D: mean per-vertex L1
    {
        const double inv = 1.0 / V;
        for (int v = 0; v < V; ++v)
            for (int c = 0; c < 3; ++c) {
                const double d = pred_mesh(v, c) - gt_mesh(v, c);
                t.vertex3d += std::abs(d) * inv;
                if (dMesh && d != 0.0)
                    (*dMesh)(v, c) += w.vertex3d * inv * (d > 0 ? 1.0 : -1.0);
            }
    }

    // vertex 2D: per view, mean per-vertex L1 of projected positions
    for (int n = 0; n < N; ++n) {
        const CameraView& view = rig.views[n];
        const double inv = 1.0 / V;
        for (int v = 0; v < V; ++v) {
            Vec2 pu, gu;
            double dp[2][3], dg[2][3];
            const Vec3 pv = {pred_mesh(v, 0), pred_mesh(v, 1), pred_mesh(v, 2)};
            const Vec3 gv = {gt_mesh(v, 0), gt_mesh(v, 1), gt_mesh(v, 2)};
            if (!project_checked(view, pv, pu, dp) || !project_checked(view, gv, gu, dg))
                continue;
            for (int c = 0; c < 2; ++c) {
                const double d = pu[c] - gu[c];
                t.vertex2d += std::abs(d) * inv;
                if (dMesh && d != 0.0) {
                    const double s = w.vertex2d * inv * (d > 0 ? 1.0 : -1.0);
                    for (int q = 0; q < 3; ++q) (*dMesh)(v, q) += s * dp[c][q];
                }
            }
        }
    }

    // skeleton terms: constants for the frozen skeleton estimator
    {
        const double inv = 1.0 / kNumJoints;
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec3 d = sub(xbar[j], gt_skeleton[j]);
            t.skeleton3d += norm3(d) * inv;
        }
        for (int n = 0; n < N; ++n) {
            const CameraView& view = rig.views[n];
            for (int j = 0; j < kNumJoints; ++j) {
                const Vec3 pc = view.to_camera(xbar[j]);
                const Vec3 gc = view.to_camera(gt_skeleton[j]);
                if (pc[2] <= 0.0 || gc[2] <= 0.0) continue;
                const Vec2 pu = project_point(view, xbar[j]);
                const Vec2 gu = project_point(view, gt_skeleton[j]);
                t.skeleton2d += std::hypot(pu[0] - gu[0], pu[1] - gu[1]) * inv;
            }
        }
    }

    t.total = w.heatmap * t.heatmap + w.skeleton2d * t.skeleton2d + w.vertex2d * t.vertex2d +
              w.skeleton3d * t.skeleton3d + w.vertex3d * t.vertex3d;
    return t;
}

ReconResult reconstruct(const MGFPModel& m, const CameraRig& rig,
                        const std::vector<HeatmapStack>& heatmaps,
                        const std::vector<FeatureMap>& features, double softargmax_temp,
                        int heatmap_down, bool fuse) {
    const int N = rig.size();
    if (N < 2) throw DimensionError("reconstruct: need at least 2 views");
    if (static_cast<int>(heatmaps.size()) != N || static_cast<int>(features.size()) != N)
        throw DimensionError("reconstruct: per-view inputs must match rig size");

    ReconResult res;
    std::vector<std::vector<Vec2>> obs(N, std::vector<Vec2>(kNumJoints));
    res.kp2d.resize(N);
    for (int n = 0; n < N; ++n) {
        res.kp2d[n].resize(kNumJoints, 2);
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec2 p = soft_argmax(heatmaps[n].channel(j), heatmaps[n].height,
                                       heatmaps[n].width, softargmax_temp);
            const Vec2 img = {p[0] * heatmap_down, p[1] * heatmap_down};
            obs[n][j] = img;
            res.kp2d[n](j, 0) = img[0];
            res.kp2d[n](j, 1) = img[1];
        }
    }
    const std::vector<Vec3> pts = dlt_triangulate(obs, rig);
    for (int j = 0; j < kNumJoints; ++j) res.xbar[j] = pts[j];

    if (fuse) {
        const Mat gk = gather_keypoint_features(features, res.xbar, rig, heatmap_down);
        const Mat gb = bone_concat(gk, m.locked.tree);
        S2MOut out = mfi_forward(m, res.xbar, gb, nullptr);
        res.patches = std::move(out.patches);
        res.mesh = std::move(out.mesh);
    } else {
        S2MOut out = s2m_forward(m.locked, res.xbar);
        res.patches = std::move(out.patches);
        res.mesh = std::move(out.mesh);
    }
    return res;
}

FusionSample prepare_fusion_sample(const SyntheticSample& s, const SynthConfig& cfg) {
    FusionSample f;
    f.gt_skeleton = s.skeleton;
    f.gt_mesh = s.mesh;
    f.rig = s.rig;

    const int N = s.rig.size();
    std::vector<std::vector<Vec2>> obs(N, std::vector<Vec2>(kNumJoints));
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec2 p = soft_argmax(s.heatmaps[n].channel(j), s.heatmaps[n].height,
                                       s.heatmaps[n].width, cfg.softargmax_temp);
            obs[n][j] = {p[0] * cfg.heatmap_down, p[1] * cfg.heatmap_down};
        }
    const std::vector<Vec3> pts = dlt_triangulate(obs, s.rig);
    for (int j = 0; j < kNumJoints; ++j) f.xbar[j] = pts[j];
    f.gk = gather_keypoint_features(s.features, f.xbar, s.rig, cfg.heatmap_down);
    return f;
}

// ---- counting ----

static long long fc_cost(int out, int in) { return static_cast<long long>(out) * in + out; }

long long count_params_mgfp(const MGFPModel& m) {
    long long total = count_params(m.locked);
    for (int i = 0; i < 3; ++i) {
        for (const auto& l : m.mfi.copy[i].layers) total += static_cast<long long>(l.param_count());
        for (const auto& l : m.mfi.zero[i]) total += static_cast<long long>(l.param_count());
    }
    return total;
}

long long count_macs_mgfp(const MGFPModel& m) {
    long long per_bone = 0;
    for (int i = 0; i < 3; ++i) {
        for (const auto& l : m.locked.axis[i].layers) per_bone += fc_cost(l.out(), l.in());
        for (const auto& l : m.mfi.copy[i].layers) per_bone += fc_cost(l.out(), l.in());
        for (const auto& l : m.mfi.zero[i]) per_bone += fc_cost(l.out(), l.in());
    }
    long long total = kNumBones * per_bone;
    if (m.locked.cfg.gsd)
        for (const auto& l : m.locked.gsd.layers) total += fc_cost(l.out(), l.in());
    return total;
}

}  // namespace s2m
