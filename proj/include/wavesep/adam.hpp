#ifndef WAVESEP_ADAM_HPP
#define WAVESEP_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "wavesep/errors.hpp"

namespace wavesep {

// Moment buffers mirror the flat parameter buffer; step_count increases by
// one per update and drives the bias correction.
template <typename T>
struct AdamState {
    std::vector<T> first_moment;
    std::vector<T> second_moment;
    uint64_t step_count = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState make(size_t param_count, double lr = 0.001) {
        AdamState s;
        s.first_moment.assign(param_count, T(0));
        s.second_moment.assign(param_count, T(0));
        s.lr = lr;
        return s;
    }
};

// Standard bias-corrected ADAM update, in place.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
        params.size() != state.second_moment.size())
        throw ConfigError("adam_step: parameter/gradient/state size mismatch");
    if (state.lr <= 0.0) throw ConfigError("adam_step: lr must be positive");
    if (state.beta1 < 0.0 || state.beta1 >= 1.0 || state.beta2 < 0.0 || state.beta2 >= 1.0)
        throw ConfigError("adam_step: betas must lie in [0, 1)");
    if (state.epsilon <= 0.0) throw ConfigError("adam_step: epsilon must be positive");
    for (const T g : grads)
        if (!std::isfinite(static_cast<double>(g)))
            throw DivergedError("adam_step: non-finite gradient, aborting update");

    state.step_count += 1;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double m = b1 * state.first_moment[i] + (1.0 - b1) * g;
        const double v = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        state.first_moment[i] = static_cast<T>(m);
        state.second_moment[i] = static_cast<T>(v);
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] = static_cast<T>(params[i] - state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
}

} // namespace wavesep

#endif
