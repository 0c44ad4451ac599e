#ifndef WAVESEP_SAMPLER_HPP
#define WAVESEP_SAMPLER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "wavesep/dataset.hpp"
#include "wavesep/feature_map.hpp"
#include "wavesep/model_config.hpp"
#include "wavesep/rng.hpp"

namespace wavesep {

struct SamplerConfig {
    double p_voiced = 0.0;             // fraction of draws forced to contain voice
    double voiced_rms_threshold = 1e-3; // ~ -60 dBFS; "contains voice" means window RMS above this
    uint64_t rng_seed = 0;

    void validate() const {
        if (p_voiced < 0.0 || p_voiced > 1.0)
            throw ConfigError("sampler: p_voiced must lie in [0, 1]");
        if (voiced_rms_threshold <= 0.0)
            throw ConfigError("sampler: voiced_rms_threshold must be > 0");
    }
};

struct SampleInterval {
    int64_t begin = 0;
    int64_t end = 0; // exclusive
};

// Window-aligned offsets (multiples of `window`) where the vocal stem's RMS
// over [offset, offset+window) exceeds the threshold. A window longer than
// the stem yields an empty list.
std::vector<SampleInterval> voiced_regions(std::span<const float> vocal_stem,
                                           double rms_threshold, int64_t window);

// One training example: the mixture segment covering a target window plus
// (receptive_field-1)/2 context on each side (zero-padded at track edges),
// and references over the target window for exactly the sources the model
// estimates (config.source_names() order).
struct SegmentDraw {
    FeatureMap<float> input;                    // 1 x input_field
    std::vector<FeatureMap<float>> references;  // one 1 x target_field map per estimated source
    int64_t offset = 0;
    bool forced_voiced = false;
};

// Draws target windows from one track: with probability p_voiced uniformly
// from the voiced regions of the vocal stem, otherwise uniformly from all
// valid offsets. When voice is requested but the track has none, the draw
// falls back to uniform and the fallback counter increments.
class SegmentSampler {
public:
    SegmentSampler(const TrackStems& track, const ModelConfig& model, const SamplerConfig& sampler);

    SegmentDraw draw(Rng& rng) const;

    // Extraction at a fixed offset; used by draw() and by validation sets.
    SegmentDraw extract(int64_t offset) const;

    const std::vector<SampleInterval>& voiced() const { return voiced_; }
    int64_t valid_offsets() const { return valid_offsets_; }
    int64_t fallback_count() const { return fallbacks_; }

private:
    const TrackStems* track_;
    ModelConfig model_;
    SamplerConfig config_;
    std::vector<const std::vector<float>*> target_stems_; // one per model output
    std::vector<SampleInterval> voiced_;
    int64_t valid_offsets_ = 0;
    mutable int64_t fallbacks_ = 0;
};

} // namespace wavesep

#endif
