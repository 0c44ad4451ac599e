#ifndef WAVESEP_GRAD_CHECK_HPP
#define WAVESEP_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "wavesep/errors.hpp"
#include "wavesep/parameters.hpp"

namespace wavesep {

// Central-difference verification of analytic gradients, run in 64-bit.
// loss_fn evaluates the scalar loss at the current parameter values; it is
// called 2*param_count times with one entry perturbed by +-h. Returns the
// worst relative error
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-12)
// over all parameters.
inline double grad_check(ParameterSet<double>& params, std::span<const double> analytic,
                         const std::function<double()>& loss_fn, double h = 1e-5) {
    if (h < 1e-7 || h > 1e-3)
        throw ConfigError("grad_check: h must lie in [1e-7, 1e-3]");
    if (analytic.size() != params.param_count())
        throw ConfigError("grad_check: gradient size mismatch");

    std::span<double> values = params.flat();
    double worst = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        const double original = values[i];
        values[i] = original + h;
        const double loss_plus = loss_fn();
        values[i] = original - h;
        const double loss_minus = loss_fn();
        values[i] = original;
        if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus))
            throw ConfigError("grad_check: loss is not finite at the evaluation point");
        const double numeric = (loss_plus - loss_minus) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

} // namespace wavesep

#endif
