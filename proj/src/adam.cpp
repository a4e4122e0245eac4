#include "s2m/adam.hpp"

#include <cmath>

namespace s2m {

void AdamState::init(const ParamSet& params, const AdamConfig& c) {
    cfg = c;
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.n, 0.0);
        v.emplace_back(p.n, 0.0);
    }
}

void adam_step(const ParamSet& params, const ParamSet& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw DimensionError("adam_step: parameter/gradient/state counts differ");

    for (size_t t = 0; t < params.size(); ++t) {
        if (params[t].n != grads[t].n)
            throw DimensionError("adam_step: shape mismatch for tensor " + params[t].name);
        if (!all_finite(grads[t].p, grads[t].n))
            throw NumericError("adam_step: non-finite gradient in tensor " + grads[t].name);
    }

    state.step += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (size_t t = 0; t < params.size(); ++t) {
        double* p = params[t].p;
        const double* g = grads[t].p;
        Vec& mt = state.m[t];
        Vec& vt = state.v[t];
        for (size_t i = 0; i < params[t].n; ++i) {
            mt[i] = b1 * mt[i] + (1.0 - b1) * g[i];
            vt[i] = b2 * vt[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = mt[i] / corr1;
            const double vhat = vt[i] / corr2;
            p[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.epsilon);
        }
    }
}

}  // namespace s2m
