#pragma once

#include <functional>

#include "s2m/mlp.hpp"

namespace s2m {

/// Central finite-difference oracle. Perturbs every coordinate of every
/// tensor in `params` by +-h, evaluates `f`, and compares against the
/// analytic gradients. Returns
///     max_i |analytic_i - fd_i| / max(1, |analytic_i|),
/// or NaN if any quantity involved is non-finite.
/// `analytic` must alias gradient buffers aligned one-to-one with `params`.
double finite_diff_check(const std::function<double()>& f, const ParamSet& params,
                         const ParamSet& analytic, double h = 1e-5);

/// Same check for an explicit function of a plain vector.
double finite_diff_check_vec(const std::function<double(const Vec&)>& f, const Vec& x,
                             const Vec& analytic, double h = 1e-5);

}  // namespace s2m
