#include "s2m/gradcheck.hpp"

#include <cmath>
#include <limits>

namespace s2m {

static double update_err(double analytic, double fd, double worst) {
    if (!std::isfinite(analytic) || !std::isfinite(fd))
        return std::numeric_limits<double>::quiet_NaN();
    const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
    return std::isnan(worst) ? worst : std::max(worst, err);
}

double finite_diff_check(const std::function<double()>& f, const ParamSet& params,
                         const ParamSet& analytic, double h) {
    if (params.size() != analytic.size())
        throw DimensionError("finite_diff_check: params/analytic count mismatch");
    double worst = 0.0;
    for (size_t t = 0; t < params.size(); ++t) {
        if (params[t].n != analytic[t].n)
            throw DimensionError("finite_diff_check: size mismatch for " + params[t].name);
        double* p = params[t].p;
        for (size_t i = 0; i < params[t].n; ++i) {
            const double saved = p[i];
            p[i] = saved + h;
            const double fp = f();
            p[i] = saved - h;
            const double fm = f();
            p[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            worst = update_err(analytic[t].p[i], fd, worst);
            if (std::isnan(worst)) return worst;
        }
    }
    return worst;
}

double finite_diff_check_vec(const std::function<double(const Vec&)>& f, const Vec& x,
                             const Vec& analytic, double h) {
    if (x.size() != analytic.size())
        throw DimensionError("finite_diff_check_vec: size mismatch");
    Vec xp = x;
    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        const double fd = (fp - fm) / (2.0 * h);
        worst = update_err(analytic[i], fd, worst);
        if (std::isnan(worst)) return worst;
    }
    return worst;
}

}  // namespace s2m
