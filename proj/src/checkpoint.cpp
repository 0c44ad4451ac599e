#include "wavesep/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace wavesep {

namespace {

constexpr char kMagic[4] = {'W', 'S', 'S', 'M'};
constexpr uint32_t kVersion = 1;

class Writer {
public:
    void bytes(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void f32_array(const std::vector<float>& v) { bytes(v.data(), v.size() * 4); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::vector<char> data, std::string path)
        : data_(std::move(data)), path_(std::move(path)) {}

    void bytes(void* p, size_t n) {
        if (off_ + n > data_.size())
            throw IntegrityError("checkpoint: " + path_ + " truncated at offset " +
                                 std::to_string(off_) + " (need " + std::to_string(n) +
                                 " more bytes)");
        std::memcpy(p, data_.data() + off_, n);
        off_ += n;
    }
    uint32_t u32() { uint32_t v; bytes(&v, 4); return v; }
    uint64_t u64() { uint64_t v; bytes(&v, 8); return v; }
    double f64() { double v; bytes(&v, 8); return v; }
    std::vector<float> f32_array(size_t n) {
        std::vector<float> v(n);
        bytes(v.data(), n * 4);
        return v;
    }
    size_t offset() const { return off_; }
    size_t size() const { return data_.size(); }
    const std::string& path() const { return path_; }

private:
    std::vector<char> data_;
    std::string path_;
    size_t off_ = 0;
};

} // namespace

Checkpoint Checkpoint::from_model(const Model& model, const AdamState<float>& adam,
                                  std::vector<EpochRecord> history) {
    Checkpoint c;
    c.config = model.config();
    std::span<const float> flat = model.params().flat();
    c.parameters.assign(flat.begin(), flat.end());
    c.adam = adam;
    c.history = std::move(history);
    return c;
}

Model Checkpoint::to_model() const {
    Model m = Model::build(config);
    if (parameters.size() != m.params().param_count())
        throw IntegrityError("checkpoint: parameter blob does not match the config");
    std::span<float> dst = m.params().flat();
    std::copy(parameters.begin(), parameters.end(), dst.begin());
    return m;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const uint64_t count = ckpt.parameters.size();
    if (ckpt.config.parameter_count() != count)
        throw ConfigError("checkpoint: parameter count does not match the config");
    if (ckpt.adam.first_moment.size() != count || ckpt.adam.second_moment.size() != count)
        throw ConfigError("checkpoint: optimizer state does not match the parameters");

    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    const std::string config_json = ckpt.config.to_json_string();
    w.u32(static_cast<uint32_t>(config_json.size()));
    w.bytes(config_json.data(), config_json.size());
    w.u64(count);
    w.f32_array(ckpt.parameters);
    w.u64(ckpt.adam.step_count);
    w.f64(ckpt.adam.lr);
    w.f64(ckpt.adam.beta1);
    w.f64(ckpt.adam.beta2);
    w.f64(ckpt.adam.epsilon);
    w.f32_array(ckpt.adam.first_moment);
    w.f32_array(ckpt.adam.second_moment);
    w.u32(static_cast<uint32_t>(ckpt.history.size()));
    for (const EpochRecord& e : ckpt.history) {
        w.f64(e.train_loss);
        w.f64(e.val_loss);
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IntegrityError("checkpoint: cannot open " + tmp.string() + " for writing");
        f.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
        if (!f) throw IntegrityError("checkpoint: write failed on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IntegrityError("checkpoint: cannot move " + tmp.string() + " to " + path.string() +
                             ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected_config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("checkpoint: cannot open " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path.string());

    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IntegrityError("checkpoint: " + path.string() + ": bad magic at offset 0");
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw IntegrityError("checkpoint: " + path.string() + ": unsupported version " +
                             std::to_string(version));

    const uint32_t json_len = r.u32();
    std::string config_json(json_len, '\0');
    r.bytes(config_json.data(), json_len);

    Checkpoint c;
    c.config = ModelConfig::from_json_string(config_json);

    const uint64_t count = r.u64();
    if (count != c.config.parameter_count())
        throw IntegrityError("checkpoint: " + path.string() + ": parameter count " +
                             std::to_string(count) + " at offset " +
                             std::to_string(r.offset() - 8) + " does not match the config (" +
                             std::to_string(c.config.parameter_count()) + ")");

    // The header now implies the exact file size; reject any disagreement
    // before reading the blobs.
    const size_t expected_size_before_history = r.offset() + count * 4 // parameters
                                                + 8 + 4 * 8            // adam scalars
                                                + 2 * count * 4;       // moments
    if (expected_size_before_history + 4 > r.size())
        throw IntegrityError("checkpoint: " + path.string() + ": truncated blob at offset " +
                             std::to_string(r.offset()) + ": file of " + std::to_string(r.size()) +
                             " bytes is shorter than the " +
                             std::to_string(expected_size_before_history + 4) +
                             " implied by its header");

    c.parameters = r.f32_array(count);
    c.adam.step_count = r.u64();
    c.adam.lr = r.f64();
    c.adam.beta1 = r.f64();
    c.adam.beta2 = r.f64();
    c.adam.epsilon = r.f64();
    c.adam.first_moment = r.f32_array(count);
    c.adam.second_moment = r.f32_array(count);

    const uint32_t history_len = r.u32();
    const size_t expected_total = r.offset() + static_cast<size_t>(history_len) * 16;
    if (expected_total != r.size())
        throw IntegrityError("checkpoint: " + path.string() + ": history length " +
                             std::to_string(history_len) + " at offset " +
                             std::to_string(r.offset() - 4) + " implies " +
                             std::to_string(expected_total) + " bytes, file has " +
                             std::to_string(r.size()));
    c.history.resize(history_len);
    for (EpochRecord& e : c.history) {
        e.train_loss = r.f64();
        e.val_loss = r.f64();
    }

    if (expected_config && !(c.config == *expected_config))
        throw ConfigError("checkpoint: " + path.string() +
                          " was saved with a different model configuration");
    return c;
}

} // namespace wavesep
