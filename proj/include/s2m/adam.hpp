#pragma once

#include "s2m/mlp.hpp"

namespace s2m {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators shaped like the parameter set they were initialized
/// from. One state must be stepped from exactly one thread at a time.
struct AdamState {
    AdamConfig cfg;
    long step = 0;
    std::vector<Vec> m;
    std::vector<Vec> v;

    void init(const ParamSet& params, const AdamConfig& c);
};

/// Standard bias-corrected Adam update, in place on `params`.
/// Throws NumericError naming the offending tensor on non-finite gradients.
void adam_step(const ParamSet& params, const ParamSet& grads, AdamState& state);

}  // namespace s2m
