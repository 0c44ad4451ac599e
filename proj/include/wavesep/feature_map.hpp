#ifndef WAVESEP_FEATURE_MAP_HPP
#define WAVESEP_FEATURE_MAP_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wavesep/errors.hpp"

namespace wavesep {

// channels x time array of samples, row-major per channel. The unit that
// flows through every layer of the network.
template <typename T>
struct FeatureMap {
    int channels = 0;
    int time_steps = 0;
    std::vector<T> data;

    FeatureMap() = default;
    FeatureMap(int channels_, int time_steps_)
        : channels(channels_),
          time_steps(time_steps_),
          data(static_cast<size_t>(channels_) * static_cast<size_t>(time_steps_), T(0)) {}

    static FeatureMap from_samples(std::span<const T> samples) {
        FeatureMap fm(1, static_cast<int>(samples.size()));
        std::copy(samples.begin(), samples.end(), fm.data.begin());
        return fm;
    }

    T* row(int c) { return data.data() + static_cast<size_t>(c) * time_steps; }
    const T* row(int c) const { return data.data() + static_cast<size_t>(c) * time_steps; }

    T& at(int c, int t) { return data[static_cast<size_t>(c) * time_steps + t]; }
    T at(int c, int t) const { return data[static_cast<size_t>(c) * time_steps + t]; }

    size_t size() const { return data.size(); }

    bool same_shape(const FeatureMap& other) const {
        return channels == other.channels && time_steps == other.time_steps;
    }

    bool all_finite() const {
        for (const T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    FeatureMap<U> cast() const {
        FeatureMap<U> out(channels, time_steps);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

} // namespace wavesep

#endif
