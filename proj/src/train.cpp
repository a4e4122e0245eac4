#include "s2m/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace s2m {

double stage1_lr(double lr0, int epoch, int half_every) {
    return lr0 * std::pow(0.5, static_cast<double>(epoch / half_every));
}

double stage2_lr(double lr0, int epoch, int drop_epoch, double factor) {
    return epoch >= drop_epoch ? lr0 * factor : lr0;
}

double mean_row_distance(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw DimensionError("mean_row_distance: shape mismatch");
    double total = 0.0;
    for (int r = 0; r < a.rows; ++r) {
        double d2 = 0.0;
        for (int c = 0; c < a.cols; ++c) {
            const double d = a(r, c) - b(r, c);
            d2 += d * d;
        }
        total += std::sqrt(d2);
    }
    return total / a.rows;
}

static std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

TrainCurve train_stage1(S2MModel& model, const std::vector<PairSample>& data,
                        const Stage1Config& cfg) {
    if (data.empty()) throw DimensionError("train_stage1: empty dataset");

    // fixed split: shuffle once by seed, first chunk is validation
    Rng split_rng(Rng::derive(cfg.seed, 0x73706cu));  // "spl"
    std::vector<int> order = shuffled_indices(static_cast<int>(data.size()), split_rng);
    const int n_val = std::min<int>(static_cast<int>(data.size()) - 1,
                                    static_cast<int>(std::round(cfg.val_fraction * data.size())));
    std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    std::vector<int> train_idx(order.begin() + n_val, order.end());

    // ground-truth patches once per sample
    std::vector<Mat> gt_patches(data.size());
    for (size_t i = 0; i < data.size(); ++i)
        gt_patches[i] = decompose_mesh(model.spec, data[i].mesh);

    ParamSet params = model.params();
    S2MGrads grads;
    grads.init(model);
    ParamSet grad_refs = grads.refs(model);
    AdamConfig acfg;
    acfg.lr = cfg.lr0;
    AdamState adam;
    adam.init(params, acfg);

    TrainCurve curve;
    const int P = model.spec.p_count;

    auto validate = [&](double* out_loss, double* out_mpvpe) {
        double loss = 0.0, mpvpe = 0.0;
        for (int i : val_idx) {
            Mat patches;
            s2m_forward_batch(model, &data[i].skeleton, 1, patches, nullptr);
            loss += patch_l2_loss(patches, gt_patches[i], nullptr);
            mpvpe += mean_row_distance(recover_mesh(model.spec, patches), data[i].mesh);
        }
        *out_loss = val_idx.empty() ? 0.0 : loss / val_idx.size();
        *out_mpvpe = val_idx.empty() ? 0.0 : mpvpe / val_idx.size();
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        adam.cfg.lr = stage1_lr(cfg.lr0, epoch, cfg.half_every);
        Rng epoch_rng(Rng::derive(cfg.seed, 0x650000u + epoch));
        std::vector<int> idx = shuffled_indices(static_cast<int>(train_idx.size()), epoch_rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < idx.size(); start += cfg.batch) {
            const int B = static_cast<int>(std::min<size_t>(cfg.batch, idx.size() - start));
            std::vector<Skeleton> xs(B);
            Mat gt(B * P, 3);
            for (int b = 0; b < B; ++b) {
                const int i = train_idx[idx[start + b]];
                xs[b] = data[i].skeleton;
                for (int r = 0; r < P; ++r)
                    std::copy(gt_patches[i].row(r), gt_patches[i].row(r) + 3,
                              gt.row(b * P + r));
            }

            S2MCache cache;
            Mat patches;
            s2m_forward_batch(model, xs.data(), B, patches, &cache);
            Mat dPatches;
            const double loss = patch_l2_loss(patches, gt, &dPatches);
            if (!std::isfinite(loss))
                throw NumericError("train_stage1: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " + std::to_string(batches));
            grads.zero();
            s2m_backward_batch(model, cache, dPatches, grads);
            adam_step(params, grad_refs, adam);
            epoch_loss += loss;
            ++batches;
        }

        double vloss = 0.0, vmpvpe = 0.0;
        validate(&vloss, &vmpvpe);
        curve.train_loss.push_back(batches ? epoch_loss / batches : 0.0);
        curve.val_loss.push_back(vloss);
        curve.val_mpvpe.push_back(vmpvpe);
        curve.epochs_run = epoch + 1;
        if (cfg.verbose)
            std::fprintf(stderr, "[stage1] epoch %d lr %.2e train %.4f val %.4f mpvpe %.4f\n",
                         epoch, adam.cfg.lr, curve.train_loss.back(), vloss, vmpvpe);
        if (cfg.target_mpvpe > 0.0 && vmpvpe < cfg.target_mpvpe) break;
    }
    return curve;
}

TrainCurve train_stage2(MGFPModel& model, const std::vector<FusionSample>& data,
                        const Stage2Config& cfg) {
    if (data.empty()) throw DimensionError("train_stage2: empty dataset");

    // snapshot the locked weights; they must be bit-identical afterwards
    std::vector<double> locked_snapshot;
    {
        ParamSet locked = model.locked.params();
        for (const auto& r : locked) locked_snapshot.insert(locked_snapshot.end(), r.p, r.p + r.n);
    }

    Rng split_rng(Rng::derive(cfg.seed, 0x73706cu));
    std::vector<int> order = shuffled_indices(static_cast<int>(data.size()), split_rng);
    const int n_val = std::min<int>(static_cast<int>(data.size()) - 1,
                                    static_cast<int>(std::round(cfg.val_fraction * data.size())));
    std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    std::vector<int> train_idx(order.begin() + n_val, order.end());

    ParamSet params = model.trainable_params();
    MFIGrads grads;
    grads.init(model);
    ParamSet grad_refs = grads.refs(model);
    AdamConfig acfg;
    acfg.lr = cfg.lr0;
    AdamState adam;
    adam.init(params, acfg);

    auto validate = [&]() {
        double mpvpe = 0.0;
        for (int i : val_idx) {
            const FusionSample& s = data[i];
            const Mat gb = bone_concat(s.gk, model.locked.tree);
            const S2MOut out = mfi_forward(model, s.xbar, gb, nullptr);
            mpvpe += mean_row_distance(out.mesh, s.gt_mesh);
        }
        return val_idx.empty() ? 0.0 : mpvpe / val_idx.size();
    };

    TrainCurve curve;
    const double baseline = validate();  // pre-update: identical to the locked cascade
    curve.val_mpvpe.push_back(baseline);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        adam.cfg.lr = stage2_lr(cfg.lr0, epoch, cfg.drop_epoch, cfg.drop_factor);
        Rng epoch_rng(Rng::derive(cfg.seed, 0x650000u + epoch));
        std::vector<int> idx = shuffled_indices(static_cast<int>(train_idx.size()), epoch_rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < idx.size(); start += cfg.batch) {
            const int B = static_cast<int>(std::min<size_t>(cfg.batch, idx.size() - start));
            grads.zero_all();
            double batch_loss = 0.0;
            for (int b = 0; b < B; ++b) {
                const FusionSample& s = data[train_idx[idx[start + b]]];
                const Mat gb = bone_concat(s.gk, model.locked.tree);
                MFICache cache;
                const S2MOut out = mfi_forward(model, s.xbar, gb, &cache);
                Mat dMesh;
                const Stage2Terms terms = stage2_loss(out.mesh, s.xbar, s.gt_mesh,
                                                      s.gt_skeleton, s.rig, cfg.weights, &dMesh);
                batch_loss += terms.total;
                const Mat dPatches = mesh_grad_to_patches(model.locked.spec, dMesh);
                mfi_backward(model, cache, dPatches, grads);
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("train_stage2: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " + std::to_string(batches));
            grads.scale_all(1.0 / B);
            adam_step(params, grad_refs, adam);
            epoch_loss += batch_loss / B;
            ++batches;
        }

        curve.train_loss.push_back(batches ? epoch_loss / batches : 0.0);
        const double vmpvpe = validate();
        curve.val_mpvpe.push_back(vmpvpe);
        curve.epochs_run = epoch + 1;
        if (cfg.verbose)
            std::fprintf(stderr, "[stage2] epoch %d lr %.2e train %.4f val-mpvpe %.4f (base %.4f)\n",
                         epoch, adam.cfg.lr, curve.train_loss.back(), vmpvpe, baseline);
        if (cfg.target_rel_improve > 0.0 &&
            vmpvpe <= baseline * (1.0 - cfg.target_rel_improve))
            break;
    }

    // freeze contract
    {
        ParamSet locked = model.locked.params();
        size_t off = 0;
        for (const auto& r : locked) {
            for (size_t i = 0; i < r.n; ++i) {
                if (std::memcmp(&locked_snapshot[off + i], &r.p[i], sizeof(double)) != 0)
                    throw NumericError("train_stage2: locked weight drift detected in " + r.name);
            }
            off += r.n;
        }
    }
    return curve;
}

}  // namespace s2m
