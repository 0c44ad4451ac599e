#include "wavesep/model.hpp"

#include <algorithm>
#include <cstring>

namespace wavesep {

SourceEstimates separate_track(const Model& model, std::span<const float> mixture,
                               int sample_rate, int threads) {
    const ModelConfig& cfg = model.config();
    if (sample_rate != cfg.sample_rate)
        throw ConfigError("separate_track: input is " + std::to_string(sample_rate) +
                          " Hz but the model expects " + std::to_string(cfg.sample_rate) + " Hz");
    if (mixture.empty()) throw ConfigError("separate_track: empty mixture");

    const int64_t track_len = static_cast<int64_t>(mixture.size());
    const int64_t tf = cfg.target_field;
    const int64_t pad = cfg.half_context();
    const int64_t input_field = cfg.input_field();
    const int64_t tiles = (track_len + tf - 1) / tf;

    SourceEstimates out;
    out.names = cfg.source_names();
    out.waveforms.assign(out.names.size(), std::vector<float>(track_len, 0.0f));

    parallel_for(static_cast<size_t>(tiles), threads, [&](size_t tile) {
        const int64_t target_begin = static_cast<int64_t>(tile) * tf;
        FeatureMap<float> segment(1, static_cast<int>(input_field));
        // segment covers [target_begin - pad, target_begin - pad + input_field)
        // of the unpadded track; anything outside [0, track_len) stays zero.
        const int64_t src_begin = target_begin - pad;
        const int64_t copy_begin = std::max<int64_t>(0, src_begin);
        const int64_t copy_end = std::min(track_len, src_begin + input_field);
        if (copy_end > copy_begin)
            std::memcpy(segment.data.data() + (copy_begin - src_begin), mixture.data() + copy_begin,
                        static_cast<size_t>(copy_end - copy_begin) * sizeof(float));

        const FeatureMap<float> estimates = model.forward(segment);
        const int64_t keep = std::min(tf, track_len - target_begin);
        for (size_t s = 0; s < out.names.size(); ++s)
            std::memcpy(out.waveforms[s].data() + target_begin, estimates.row(static_cast<int>(s)),
                        static_cast<size_t>(keep) * sizeof(float));
    });
    return out;
}

SourceEstimates complete_sources(std::span<const float> mixture, SourceEstimates estimates,
                                 const std::string& residual_name) {
    for (const std::vector<float>& w : estimates.waveforms)
        if (w.size() != mixture.size())
            throw ConfigError("complete_sources: estimate length " + std::to_string(w.size()) +
                              " does not match mixture length " + std::to_string(mixture.size()));

    std::vector<float> residual(mixture.begin(), mixture.end());
    for (const std::vector<float>& w : estimates.waveforms)
        for (size_t t = 0; t < residual.size(); ++t) residual[t] -= w[t];

    estimates.names.push_back(residual_name);
    estimates.waveforms.push_back(std::move(residual));
    return estimates;
}

} // namespace wavesep
