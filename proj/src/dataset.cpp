#include "wavesep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "wavesep/wav_io.hpp"

namespace wavesep {

namespace {

const std::vector<std::string> kMultiInstrument = {"vocals", "drums", "bass", "other"};
const std::vector<std::string> kSingingVoice = {"vocals", "accompaniment"};

bool file_exists(const std::filesystem::path& p) {
    std::error_code ec;
    return std::filesystem::is_regular_file(p, ec);
}

} // namespace

TrackStems load_track(const std::filesystem::path& track_dir, int expected_rate) {
    TrackStems track;
    track.name = track_dir.filename().string();
    track.sample_rate = expected_rate;

    const std::vector<std::string>* layout = nullptr;
    if (file_exists(track_dir / "drums.wav") || file_exists(track_dir / "bass.wav") ||
        file_exists(track_dir / "other.wav"))
        layout = &kMultiInstrument;
    else if (file_exists(track_dir / "accompaniment.wav"))
        layout = &kSingingVoice;
    else
        throw DatasetError("track '" + track.name +
                           "': found neither {vocals,drums,bass,other} nor "
                           "{vocals,accompaniment} stems");

    std::vector<std::string> missing;
    for (const std::string& stem : *layout)
        if (!file_exists(track_dir / (stem + ".wav"))) missing.push_back(stem);
    if (!missing.empty()) {
        std::string list;
        for (const std::string& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw DatasetError("track '" + track.name + "': missing stems: " + list);
    }

    for (const std::string& stem : *layout) {
        WavData wav = read_wav(track_dir / (stem + ".wav"));
        if (wav.sample_rate != expected_rate)
            throw DatasetError("track '" + track.name + "': " + stem + ".wav is " +
                               std::to_string(wav.sample_rate) + " Hz, expected " +
                               std::to_string(expected_rate) +
                               " Hz; resample externally to 16 kHz");
        // float32 input may poke outside [-1, 1]; stems are defined on it
        for (float& v : wav.samples) v = std::clamp(v, -1.0f, 1.0f);
        track.source_names.push_back(stem);
        track.sources.push_back(std::move(wav.samples));
    }

    for (size_t i = 1; i < track.sources.size(); ++i)
        if (track.sources[i].size() != track.sources[0].size())
            throw DatasetError("track '" + track.name + "': stem lengths differ (" +
                               track.source_names[0] + "=" +
                               std::to_string(track.sources[0].size()) + ", " +
                               track.source_names[i] + "=" +
                               std::to_string(track.sources[i].size()) + ")");

    const size_t len = track.sources[0].size();
    if (file_exists(track_dir / "mixture.wav")) {
        WavData wav = read_wav(track_dir / "mixture.wav");
        if (wav.sample_rate != expected_rate)
            throw DatasetError("track '" + track.name + "': mixture.wav is " +
                               std::to_string(wav.sample_rate) + " Hz, expected " +
                               std::to_string(expected_rate) +
                               " Hz; resample externally to 16 kHz");
        if (wav.samples.size() != len)
            throw DatasetError("track '" + track.name + "': mixture length " +
                               std::to_string(wav.samples.size()) + " does not match stem length " +
                               std::to_string(len));
        track.mixture = std::move(wav.samples);

        // Real stems exhibit clipping-induced mismatch; warn past 1e-3.
        float worst = 0.0f;
        for (size_t t = 0; t < len; ++t) {
            float sum = 0.0f;
            for (const std::vector<float>& s : track.sources) sum += s[t];
            worst = std::max(worst, std::abs(sum - track.mixture[t]));
        }
        if (worst > 1e-3f)
            std::cerr << "warning: track '" << track.name << "': mixture deviates from stem sum by "
                      << worst << "\n";
    } else {
        track.mixture.resize(len);
        for (size_t t = 0; t < len; ++t) {
            float sum = 0.0f;
            for (const std::vector<float>& s : track.sources) sum += s[t];
            track.mixture[t] = std::clamp(sum, -1.0f, 1.0f);
        }
    }
    return track;
}

std::vector<TrackStems> load_stem_directory(const std::filesystem::path& root, int expected_rate) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root, ec))
        throw DatasetError("dataset: " + root.string() + " is not a directory");

    std::vector<std::filesystem::path> track_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory()) track_dirs.push_back(entry.path());
    std::sort(track_dirs.begin(), track_dirs.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

    std::vector<TrackStems> tracks;
    tracks.reserve(track_dirs.size());
    for (const std::filesystem::path& dir : track_dirs)
        tracks.push_back(load_track(dir, expected_rate));
    return tracks;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("manifest: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("manifest: " + path.string() + ": " + e.what());
    }
    DatasetManifest m;
    try {
        if (j.contains("train")) j.at("train").get_to(m.train);
        if (j.contains("validation")) j.at("validation").get_to(m.validation);
        if (j.contains("test")) j.at("test").get_to(m.test);
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("manifest: " + path.string() + ": " + e.what());
    }
    return m;
}

std::vector<TrackStems> select_tracks(const std::vector<TrackStems>& all,
                                      const std::vector<std::string>& names) {
    std::vector<TrackStems> out;
    for (const std::string& name : names) {
        auto it = std::find_if(all.begin(), all.end(),
                               [&](const TrackStems& t) { return t.name == name; });
        if (it == all.end()) throw DatasetError("manifest lists unknown track '" + name + "'");
        out.push_back(*it);
    }
    return out;
}

} // namespace wavesep
