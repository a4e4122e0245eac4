#pragma once

#include "s2m/adam.hpp"
#include "s2m/fusion.hpp"

namespace s2m {

struct PairSample {
    Skeleton skeleton{};
    Mat mesh;
};

struct Stage1Config {
    int epochs = 300;
    double lr0 = 1e-4;
    int half_every = 50;  // halve the learning rate every 50 epochs
    int batch = 32;
    double val_fraction = 0.05;
    uint64_t seed = 1;
    double target_mpvpe = -1.0;  // early stop once held-out MPVPE drops below (if > 0)
    bool verbose = false;
};

struct Stage2Config {
    int epochs = 100;
    double lr0 = 1e-4;
    int drop_epoch = 70;  // learning rate / 10 from this epoch on
    double drop_factor = 0.1;
    int batch = 32;
    double val_fraction = 0.1;
    uint64_t seed = 2;
    LossWeights weights;
    double target_rel_improve = -1.0;  // early stop at this relative MPVPE gain (if > 0)
    bool verbose = false;
};

struct TrainCurve {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;
    std::vector<double> val_mpvpe;   // val_mpvpe[0] is measured before any update
    int epochs_run = 0;
};

double stage1_lr(double lr0, int epoch, int half_every);
double stage2_lr(double lr0, int epoch, int drop_epoch, double factor);

/// Stage 1: fit the skeleton-to-mesh model on ground-truth (skeleton, mesh)
/// pairs with Adam. Deterministic given the config seed. Throws
/// NumericError (with epoch/batch) if the loss goes non-finite.
TrainCurve train_stage1(S2MModel& model, const std::vector<PairSample>& data,
                        const Stage1Config& cfg);

/// Stage 2: fit the infuser on reduced multi-view samples; only MFI
/// parameters are updated and the locked weights are verified bit-identical
/// at the end (aborts otherwise).
TrainCurve train_stage2(MGFPModel& model, const std::vector<FusionSample>& data,
                        const Stage2Config& cfg);

/// Mean Euclidean row distance (used as MPVPE on meshes during training).
double mean_row_distance(const Mat& a, const Mat& b);

}  // namespace s2m
