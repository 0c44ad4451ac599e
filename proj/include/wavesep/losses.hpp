#ifndef WAVESEP_LOSSES_HPP
#define WAVESEP_LOSSES_HPP

#include <cmath>
#include <string>
#include <vector>

#include "wavesep/errors.hpp"
#include "wavesep/feature_map.hpp"
#include "wavesep/graph.hpp"

namespace wavesep {

enum class Reduction { Sum, Mean };

inline Reduction reduction_from_string(const std::string& s) {
    if (s == "sum") return Reduction::Sum;
    if (s == "mean") return Reduction::Mean;
    throw ConfigError("reduction must be 'sum' or 'mean', got '" + s + "'");
}

struct LossConfig {
    double alpha = 0.0; // dissimilarity weight; 0 reduces the total loss to plain MAE
    Reduction reduction = Reduction::Sum;

    void validate() const {
        if (alpha < 0.0) throw ConfigError("loss: alpha must be >= 0");
    }
};

namespace detail {

template <typename T>
void check_loss_shapes(const FeatureMap<T>& estimates, const std::vector<FeatureMap<T>>& references) {
    if (references.empty()) throw ConfigError("loss: no references");
    if (estimates.channels != static_cast<int>(references.size()))
        throw ConfigError("loss: " + std::to_string(estimates.channels) + " estimated sources vs " +
                          std::to_string(references.size()) + " references");
    for (const FeatureMap<T>& r : references)
        if (r.channels != 1 || r.time_steps != estimates.time_steps)
            throw ConfigError("loss: reference shape mismatch");
}

} // namespace detail

// Sum (or mean) over sources and target-field samples of |estimate - reference|.
template <typename T>
double loss_mae(const FeatureMap<T>& estimates, const std::vector<FeatureMap<T>>& references,
                Reduction reduction = Reduction::Sum) {
    detail::check_loss_shapes(estimates, references);
    double acc = 0.0;
    for (int j = 0; j < estimates.channels; ++j) {
        const T* est = estimates.row(j);
        const T* ref = references[j].row(0);
        for (int t = 0; t < estimates.time_steps; ++t)
            acc += std::abs(static_cast<double>(est[t]) - static_cast<double>(ref[t]));
    }
    if (reduction == Reduction::Mean)
        acc /= static_cast<double>(estimates.channels) * estimates.time_steps;
    return acc;
}

// MAE minus alpha times the pairwise dissimilarity term
//   L_d = sum_j sum_{i != j} |estimate_j - reference_i|,
// which rewards estimates for staying far from the other sources.
template <typename T>
double loss_total(const FeatureMap<T>& estimates, const std::vector<FeatureMap<T>>& references,
                  const LossConfig& cfg) {
    cfg.validate();
    if (cfg.alpha == 0.0) return loss_mae(estimates, references, cfg.reduction);
    detail::check_loss_shapes(estimates, references);
    const int sources = estimates.channels;
    if (sources < 2)
        throw ConfigError("loss: the dissimilarity term needs at least 2 sources");

    const double mae = loss_mae(estimates, references, cfg.reduction);
    double dissim = 0.0;
    for (int j = 0; j < sources; ++j) {
        const T* est = estimates.row(j);
        for (int i = 0; i < sources; ++i) {
            if (i == j) continue;
            const T* ref = references[i].row(0);
            for (int t = 0; t < estimates.time_steps; ++t)
                dissim += std::abs(static_cast<double>(est[t]) - static_cast<double>(ref[t]));
        }
    }
    if (cfg.reduction == Reduction::Mean)
        dissim /= static_cast<double>(sources) * (sources - 1) * estimates.time_steps;
    return mae - cfg.alpha * dissim;
}

// Node ids of the losses recorded on a graph; 'total' is the training
// objective, 'mae' the plain term used for monitoring and validation.
struct LossNodes {
    int total = -1;
    int mae = -1;
};

// Records the loss on the graph so backward() reaches the parameters.
// With alpha = 0 the total IS the MAE node, bit for bit.
template <typename T>
LossNodes build_loss(Graph<T>& g, int estimates_node, const std::vector<FeatureMap<T>>& references,
                     const LossConfig& cfg) {
    cfg.validate();
    const FeatureMap<T>& est = g.value(estimates_node);
    detail::check_loss_shapes(est, references);
    const int sources = est.channels;
    if (cfg.alpha > 0.0 && sources < 2)
        throw ConfigError("loss: the dissimilarity term needs at least 2 sources");

    std::vector<int> slices(sources);
    std::vector<int> refs(sources);
    for (int j = 0; j < sources; ++j) {
        slices[j] = g.channel_slice(estimates_node, j, 1);
        refs[j] = g.constant(references[j]);
    }

    int mae = -1;
    for (int j = 0; j < sources; ++j) {
        const int term = g.abs_diff_sum(slices[j], refs[j]);
        mae = (mae < 0) ? term : g.add(mae, term);
    }
    if (cfg.reduction == Reduction::Mean)
        mae = g.scale(mae, T(1.0 / (static_cast<double>(sources) * est.time_steps)));

    LossNodes nodes;
    nodes.mae = mae;
    if (cfg.alpha == 0.0) {
        nodes.total = mae;
        return nodes;
    }

    int dissim = -1;
    for (int j = 0; j < sources; ++j) {
        for (int i = 0; i < sources; ++i) {
            if (i == j) continue;
            const int term = g.abs_diff_sum(slices[j], refs[i]);
            dissim = (dissim < 0) ? term : g.add(dissim, term);
        }
    }
    if (cfg.reduction == Reduction::Mean)
        dissim = g.scale(dissim, T(1.0 / (static_cast<double>(sources) * (sources - 1) * est.time_steps)));
    nodes.total = g.add(mae, g.scale(dissim, T(-cfg.alpha)));
    return nodes;
}

} // namespace wavesep

#endif
