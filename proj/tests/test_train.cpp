#include <cmath>

#include "doctest.h"
#include "s2m/train.hpp"

using namespace s2m;

TEST_CASE("stage-1 learning rate schedule halves every 50 epochs") {
    CHECK(stage1_lr(1e-4, 0, 50) == doctest::Approx(1e-4));
    CHECK(stage1_lr(1e-4, 49, 50) == doctest::Approx(1e-4));
    CHECK(stage1_lr(1e-4, 50, 50) == doctest::Approx(5e-5));
    CHECK(stage1_lr(1e-4, 100, 50) == doctest::Approx(2.5e-5));
}

TEST_CASE("stage-2 learning rate drops by 10x after the 70th epoch") {
    CHECK(stage2_lr(1e-4, 0, 70, 0.1) == doctest::Approx(1e-4));
    CHECK(stage2_lr(1e-4, 69, 70, 0.1) == doctest::Approx(1e-4));
    CHECK(stage2_lr(1e-4, 70, 70, 0.1) == doctest::Approx(1e-5));
    CHECK(stage2_lr(1e-4, 99, 70, 0.1) == doctest::Approx(1e-5));
}

static std::vector<PairSample> tiny_dataset(int n) {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    SynthConfig cfg;
    std::vector<PairSample> data(n);
    for (int i = 0; i < n; ++i)
        synthesize_pose_pair(t, tree, cfg, 500 + i, data[i].skeleton, data[i].mesh);
    return data;
}

static S2MModel tiny_model(uint64_t seed) {
    S2MConfig cfg;
    cfg.depth = 2;
    cfg.hidden = 24;
    const KinematicTree tree = KinematicTree::standard();
    const DecompositionSpec spec = build_decomposition(builtin_template(), 0.3);
    return make_s2m_model(cfg, tree, spec, seed);
}

TEST_CASE("short stage-1 run reduces the loss and is reproducible") {
    const std::vector<PairSample> data = tiny_dataset(48);

    Stage1Config cfg;
    cfg.epochs = 4;
    cfg.batch = 16;
    cfg.val_fraction = 0.125;
    cfg.lr0 = 1e-3;  // faster settling for the smoke test

    S2MModel a = tiny_model(3);
    const TrainCurve ca = train_stage1(a, data, cfg);
    CHECK(ca.epochs_run == 4);
    CHECK(ca.train_loss.back() < ca.train_loss.front());

    S2MModel b = tiny_model(3);
    const TrainCurve cb = train_stage1(b, data, cfg);
    ParamSet pa = a.params(), pb = b.params();
    for (size_t i = 0; i < pa.size(); ++i)
        for (size_t j = 0; j < pa[i].n; ++j) CHECK(pa[i].p[j] == pb[i].p[j]);
    for (int e = 0; e < 4; ++e) CHECK(ca.train_loss[e] == cb.train_loss[e]);
}

TEST_CASE("stage-1 aborts on an empty dataset") {
    S2MModel m = tiny_model(1);
    CHECK_THROWS_AS(train_stage1(m, {}, {}), DimensionError);
}
