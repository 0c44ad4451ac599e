#ifndef WAVESEP_DATASET_HPP
#define WAVESEP_DATASET_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "wavesep/errors.hpp"

namespace wavesep {

// A mixture plus its named reference stems, equal lengths, one sample rate.
struct TrackStems {
    std::string name;
    int sample_rate = 16000;
    std::vector<float> mixture;
    std::vector<std::string> source_names;
    std::vector<std::vector<float>> sources;

    int64_t length() const { return static_cast<int64_t>(mixture.size()); }

    const std::vector<float>& source(const std::string& wanted) const {
        for (size_t i = 0; i < source_names.size(); ++i)
            if (source_names[i] == wanted) return sources[i];
        throw DatasetError("track '" + name + "': no stem named '" + wanted + "'");
    }

    bool has_source(const std::string& wanted) const {
        for (const std::string& n : source_names)
            if (n == wanted) return true;
        return false;
    }
};

// Directory layout, one subdirectory per track:
//   root/<track>/{mixture.wav, vocals.wav, drums.wav, bass.wav, other.wav}
// for multi-instrument, or
//   root/<track>/{mixture.wav, vocals.wav, accompaniment.wav}
// for singing voice. mixture.wav is optional; when absent the mixture is
// synthesized as the clamped sum of the stems. Inputs must already be at
// the expected rate (default 16 kHz); there is no resampler.
std::vector<TrackStems> load_stem_directory(const std::filesystem::path& root,
                                            int expected_rate = 16000);

TrackStems load_track(const std::filesystem::path& track_dir, int expected_rate = 16000);

// dataset.json: {"train": [...], "validation": [...], "test": [...]}
struct DatasetManifest {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

// Picks the named tracks out of a loaded dataset, erroring on misses.
std::vector<TrackStems> select_tracks(const std::vector<TrackStems>& all,
                                      const std::vector<std::string>& names);

} // namespace wavesep

#endif
