#include "wavesep/wav_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "wavesep/errors.hpp"

namespace wavesep {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

// Little-endian readers over a byte buffer; offsets checked by the caller.
uint32_t read_u32(const std::vector<char>& b, size_t off) {
    uint32_t v;
    std::memcpy(&v, b.data() + off, 4);
    return v;
}

uint16_t read_u16(const std::vector<char>& b, size_t off) {
    uint16_t v;
    std::memcpy(&v, b.data() + off, 2);
    return v;
}

void append_u32(std::string& out, uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void append_u16(std::string& out, uint16_t v) { out.append(reinterpret_cast<const char*>(&v), 2); }

} // namespace

WavData read_wav(const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "WAV codec assumes little-endian");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("wav: cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IntegrityError("wav: " + path.string() + " is not a RIFF/WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    size_t data_off = 0, data_len = 0;
    bool have_data = false;

    size_t off = 12;
    while (off + 8 <= bytes.size()) {
        char id[5] = {bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3], 0};
        const uint32_t chunk_len = read_u32(bytes, off + 4);
        const size_t body = off + 8;
        if (body + chunk_len > bytes.size())
            throw IntegrityError("wav: " + path.string() + ": chunk '" + id +
                                 "' at offset " + std::to_string(off) + " overruns the file");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw IntegrityError("wav: " + path.string() + ": short fmt chunk");
            format = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            sample_rate = read_u32(bytes, body + 4);
            bits = read_u16(bytes, body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_off = body;
            data_len = chunk_len;
            have_data = true;
        }
        off = body + chunk_len + (chunk_len % 2); // chunks are word-aligned
    }

    if (!have_fmt) throw IntegrityError("wav: " + path.string() + ": missing fmt chunk");
    if (!have_data) throw IntegrityError("wav: " + path.string() + ": missing data chunk");
    if (channels != 1 && channels != 2)
        throw IntegrityError("wav: " + path.string() + ": fmt chunk declares " +
                             std::to_string(channels) + " channels; only mono or stereo supported");
    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool float32 = format == kFormatFloat && bits == 32;
    if (!pcm16 && !float32)
        throw IntegrityError("wav: " + path.string() + ": fmt chunk declares format " +
                             std::to_string(format) + " at " + std::to_string(bits) +
                             " bits; only PCM16 and float32 supported");

    const size_t bytes_per_sample = pcm16 ? 2 : 4;
    const size_t frame_size = bytes_per_sample * channels;
    if (data_len % frame_size != 0)
        throw IntegrityError("wav: " + path.string() + ": data chunk of " +
                             std::to_string(data_len) + " bytes is not a whole number of frames");
    const size_t frames = data_len / frame_size;

    WavData out;
    out.sample_rate = static_cast<int>(sample_rate);
    out.samples.resize(frames);
    const char* p = bytes.data() + data_off;
    for (size_t f = 0; f < frames; ++f) {
        float acc = 0.0f;
        for (uint16_t c = 0; c < channels; ++c) {
            if (pcm16) {
                int16_t s;
                std::memcpy(&s, p, 2);
                p += 2;
                acc += static_cast<float>(s) / 32768.0f;
            } else {
                float s;
                std::memcpy(&s, p, 4);
                p += 4;
                acc += s;
            }
        }
        out.samples[f] = acc / static_cast<float>(channels);
    }
    return out;
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate) {
    static_assert(std::endian::native == std::endian::little, "WAV codec assumes little-endian");
    const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);

    std::string out;
    out.reserve(44 + data_len);
    out.append("RIFF");
    append_u32(out, 36 + data_len);
    out.append("WAVE");
    out.append("fmt ");
    append_u32(out, 16);
    append_u16(out, kFormatPcm);
    append_u16(out, 1); // mono
    append_u32(out, static_cast<uint32_t>(sample_rate));
    append_u32(out, static_cast<uint32_t>(sample_rate) * 2); // byte rate
    append_u16(out, 2);                                      // block align
    append_u16(out, 16);                                     // bits per sample
    out.append("data");
    append_u32(out, data_len);
    for (const float x : samples) {
        const double clamped = std::fmin(1.0, std::fmax(-1.0, static_cast<double>(x)));
        const long q = std::lround(clamped * 32768.0);
        const int16_t s = static_cast<int16_t>(std::min(32767L, std::max(-32768L, q)));
        out.append(reinterpret_cast<const char*>(&s), 2);
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IntegrityError("wav: cannot open " + tmp.string() + " for writing");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw IntegrityError("wav: write failed on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IntegrityError("wav: cannot move " + tmp.string() + " to " + path.string() +
                                 ": " + ec.message());
}

} // namespace wavesep
