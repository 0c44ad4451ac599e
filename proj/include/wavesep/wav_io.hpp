#ifndef WAVESEP_WAV_IO_HPP
#define WAVESEP_WAV_IO_HPP

#include <filesystem>
#include <span>
#include <vector>

namespace wavesep {

struct WavData {
    std::vector<float> samples; // mono, in [-1, 1]
    int sample_rate = 0;
};

// Reads RIFF/WAVE, PCM 16-bit or IEEE float 32-bit, mono or stereo (stereo
// is averaged to mono). int16 samples map to s/32768, so -32768 -> -1.0 and
// 32767 -> 0.999969...
WavData read_wav(const std::filesystem::path& path);

// Clamps to [-1, 1] and writes PCM 16-bit mono via a temp file + rename.
// Quantization is round(x * 32768) clamped to int16, which keeps the
// read-back error within 1/32768 per sample.
void write_wav(const std::filesystem::path& path, std::span<const float> samples, int sample_rate);

} // namespace wavesep

#endif
