#ifndef WAVESEP_MODEL_HPP
#define WAVESEP_MODEL_HPP

#include <span>
#include <string>
#include <vector>

#include "wavesep/graph.hpp"
#include "wavesep/model_config.hpp"
#include "wavesep/parallel.hpp"

namespace wavesep {

// Named per-source waveforms of equal length.
struct SourceEstimates {
    std::vector<std::string> names;
    std::vector<std::vector<float>> waveforms;

    size_t count() const { return names.size(); }
    const std::vector<float>& waveform(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return waveforms[i];
        throw ConfigError("estimates: no source named '" + name + "'");
    }
};

// The non-causal dilated-convolution network. Every convolution is VALID
// (no padding); boundary context is supplied by the caller, so one forward
// pass maps input_field samples to target_field samples per source.
template <typename T>
class WavenetModel {
public:
    static WavenetModel build(const ModelConfig& config) {
        config.validate();
        WavenetModel m;
        m.config_ = config;
        const std::vector<int> ds = config.dilations();
        for (const auto& [name, shape] : config.kernel_shapes())
            m.kernel_ids_.push_back(m.params_.add_kernel(name, shape));
        // kernel_ids_ layout: [0]=input_proj, then 3 per layer, then
        // post1, post2, output_proj.
        m.layer_dilations_.reserve(static_cast<size_t>(config.stacks) * config.dilation_depth);
        for (int s = 0; s < config.stacks; ++s)
            for (int i = 0; i < config.dilation_depth; ++i)
                m.layer_dilations_.push_back(ds[i]);
        return m;
    }

    void init_weights(uint64_t seed) { params_.init_weights(seed); }

    const ModelConfig& config() const { return config_; }
    ParameterSet<T>& params() { return params_; }
    const ParameterSet<T>& params() const { return params_; }

    int input_proj_kernel() const { return kernel_ids_.front(); }
    int layer_kernel(int layer, int which) const { return kernel_ids_[1 + 3 * layer + which]; }
    int post1_kernel() const { return kernel_ids_[kernel_ids_.size() - 3]; }
    int post2_kernel() const { return kernel_ids_[kernel_ids_.size() - 2]; }
    int output_kernel() const { return kernel_ids_.back(); }
    int layer_count() const { return static_cast<int>(layer_dilations_.size()); }
    int layer_dilation(int layer) const { return layer_dilations_[layer]; }

    // Records the full pipeline on the graph and returns the node holding
    // (num_outputs, target_field). The input node must hold one channel of
    // exactly input_field samples.
    int forward(Graph<T>& g, int input_node) const {
        const FeatureMap<T>& in = g.value(input_node);
        if (in.channels != 1 || in.time_steps != config_.input_field())
            throw ConfigError("forward: expected 1x" + std::to_string(config_.input_field()) +
                              " input, got " + std::to_string(in.channels) + "x" +
                              std::to_string(in.time_steps));

        // Skip branches are cropped to target_field + 4 so that the two
        // post 3x1 convolutions land exactly on the target field.
        const int skip_len = config_.target_field + 4;

        int x = g.conv1d(input_node, input_proj_kernel(), 1);
        int skip_sum = -1;
        const int layers = layer_count();
        for (int l = 0; l < layers; ++l) {
            const int d = layer_dilations_[l];
            const int pre = g.conv1d(x, layer_kernel(l, 0), d);
            const int z = g.gated(pre);
            const int skip = g.center_crop(g.conv1d(z, layer_kernel(l, 2), 1), skip_len);
            skip_sum = (skip_sum < 0) ? skip : g.add(skip_sum, skip);
            if (l + 1 < layers) {
                const int res = g.conv1d(z, layer_kernel(l, 1), 1);
                const int cropped = g.center_crop(x, g.value(res).time_steps);
                x = g.add(cropped, res);
            }
        }
        int y = g.relu(skip_sum);
        y = g.relu(g.conv1d(y, post1_kernel(), 1));
        y = g.conv1d(y, post2_kernel(), 1);
        return g.conv1d(y, output_kernel(), 1);
    }

    // Inference convenience: one segment in, per-source target field out.
    FeatureMap<T> forward(const FeatureMap<T>& segment) const {
        Graph<T> g(params_);
        const int out = forward(g, g.constant(segment));
        return g.value(out);
    }

    template <typename U>
    WavenetModel<U> cast() const {
        WavenetModel<U> out = WavenetModel<U>::build(config_);
        std::span<U> dst = out.params().flat();
        std::span<const T> src = params_.flat();
        for (size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
        return out;
    }

private:
    ModelConfig config_;
    ParameterSet<T> params_;
    std::vector<int> kernel_ids_;
    std::vector<int> layer_dilations_;
};

using Model = WavenetModel<float>;

// Separates a full track by tiling. The mixture is zero-padded by
// (receptive_field - 1) / 2 on each side, split into consecutive
// non-overlapping target-field windows (the last one zero-padded and its
// excess trimmed), and the per-window outputs are concatenated; the result
// has exactly the input length. Tiles may run in parallel, each writing a
// disjoint output range.
SourceEstimates separate_track(const Model& model, std::span<const float> mixture,
                               int sample_rate, int threads = 1);

// Appends the residual source mixture - sum(estimates) under the given
// name, so the returned sources always sum back to the mixture.
SourceEstimates complete_sources(std::span<const float> mixture, SourceEstimates estimates,
                                 const std::string& residual_name);

} // namespace wavesep

#endif
