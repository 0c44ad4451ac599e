#include "wavesep/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace wavesep {

std::vector<SampleInterval> voiced_regions(std::span<const float> vocal_stem,
                                           double rms_threshold, int64_t window) {
    if (rms_threshold <= 0.0) throw ConfigError("voiced_regions: threshold must be > 0");
    if (window < 1) throw ConfigError("voiced_regions: window must be >= 1");
    std::vector<SampleInterval> out;
    const int64_t len = static_cast<int64_t>(vocal_stem.size());
    for (int64_t begin = 0; begin + window <= len; begin += window) {
        double energy = 0.0;
        for (int64_t t = begin; t < begin + window; ++t)
            energy += static_cast<double>(vocal_stem[t]) * vocal_stem[t];
        if (std::sqrt(energy / static_cast<double>(window)) > rms_threshold)
            out.push_back({begin, begin + window});
    }
    return out;
}

SegmentSampler::SegmentSampler(const TrackStems& track, const ModelConfig& model,
                               const SamplerConfig& sampler)
    : track_(&track), model_(model), config_(sampler) {
    model_.validate();
    config_.validate();
    valid_offsets_ = track.length() - model_.target_field + 1;
    if (valid_offsets_ < 1)
        throw DatasetError("track '" + track.name + "' of " + std::to_string(track.length()) +
                           " samples is shorter than one target field (" +
                           std::to_string(model_.target_field) + ")");
    if (track.source_names.empty())
        throw DatasetError("track '" + track.name + "' has no stems");
    for (const std::string& wanted : model_.source_names())
        target_stems_.push_back(&track.source(wanted)); // throws when a stem is missing
    if (config_.p_voiced > 0.0 && !track.has_source("vocals"))
        throw DatasetError("track '" + track.name + "': voiced sampling needs a vocals stem");
    if (track.has_source("vocals"))
        voiced_ = voiced_regions(track.source("vocals"), config_.voiced_rms_threshold,
                                 model_.target_field);
}

SegmentDraw SegmentSampler::extract(int64_t offset) const {
    const int64_t tf = model_.target_field;
    const int64_t pad = model_.half_context();
    const int64_t input_field = model_.input_field();
    const int64_t track_len = track_->length();
    if (offset < 0 || offset + tf > track_len)
        throw ConfigError("extract: offset out of range");

    SegmentDraw draw;
    draw.offset = offset;
    draw.input = FeatureMap<float>(1, static_cast<int>(input_field));
    const int64_t src_begin = offset - pad;
    const int64_t copy_begin = std::max<int64_t>(0, src_begin);
    const int64_t copy_end = std::min(track_len, src_begin + input_field);
    if (copy_end > copy_begin)
        std::memcpy(draw.input.data.data() + (copy_begin - src_begin),
                    track_->mixture.data() + copy_begin,
                    static_cast<size_t>(copy_end - copy_begin) * sizeof(float));

    draw.references.reserve(target_stems_.size());
    for (const std::vector<float>* stem : target_stems_) {
        FeatureMap<float> ref(1, static_cast<int>(tf));
        std::memcpy(ref.data.data(), stem->data() + offset,
                    static_cast<size_t>(tf) * sizeof(float));
        draw.references.push_back(std::move(ref));
    }
    return draw;
}

SegmentDraw SegmentSampler::draw(Rng& rng) const {
    bool force_voiced = config_.p_voiced > 0.0 && rng.bernoulli(config_.p_voiced);
    if (force_voiced && voiced_.empty()) {
        ++fallbacks_;
        force_voiced = false;
    }
    int64_t offset;
    if (force_voiced)
        offset = voiced_[rng.below(voiced_.size())].begin;
    else
        offset = static_cast<int64_t>(rng.below(static_cast<uint64_t>(valid_offsets_)));
    SegmentDraw d = extract(offset);
    d.forced_voiced = force_voiced;
    return d;
}

} // namespace wavesep
