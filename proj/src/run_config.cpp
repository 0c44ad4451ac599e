#include "wavesep/run_config.hpp"

#include <charconv>
#include <fstream>

namespace wavesep {

namespace {

std::string trim(const std::string& s) {
    const size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError("config: key '" + key + "': '" + value + "' is not an integer");
    return v;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError("config: key '" + key + "': '" + value + "' is not a non-negative integer");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': '" + value + "' is not a number");
    }
}

} // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config: line " + std::to_string(line_no) + ": empty key or value");

        if (key == "stacks") cfg.model.stacks = parse_int(key, value);
        else if (key == "filters") cfg.model.filters = parse_int(key, value);
        else if (key == "dilation_depth") cfg.model.dilation_depth = parse_int(key, value);
        else if (key == "target_field") cfg.model.target_field = parse_int(key, value);
        else if (key == "num_outputs") cfg.model.num_outputs = parse_int(key, value);
        else if (key == "sample_rate") cfg.model.sample_rate = parse_int(key, value);
        else if (key == "post_filters_1") cfg.model.post_filters_1 = parse_int(key, value);
        else if (key == "post_filters_2") cfg.model.post_filters_2 = parse_int(key, value);
        else if (key == "lr") cfg.train.lr = parse_double(key, value);
        else if (key == "batch_size") cfg.train.batch_size = parse_int(key, value);
        else if (key == "patience_epochs") cfg.train.patience_epochs = parse_int(key, value);
        else if (key == "steps_per_epoch") cfg.train.steps_per_epoch = parse_int(key, value);
        else if (key == "max_epochs") cfg.train.max_epochs = parse_int(key, value);
        else if (key == "val_segments") cfg.train.val_segments = parse_int(key, value);
        else if (key == "seed") cfg.train.seed = parse_u64(key, value);
        else if (key == "alpha") cfg.loss.alpha = parse_double(key, value);
        else if (key == "reduction") cfg.loss.reduction = reduction_from_string(value);
        else if (key == "p_voiced") cfg.sampler.p_voiced = parse_double(key, value);
        else if (key == "voiced_rms_threshold") cfg.sampler.voiced_rms_threshold = parse_double(key, value);
        else if (key == "dataset_root") cfg.dataset_root = value;
        else if (key == "manifest") cfg.manifest = value;
        else if (key == "output_dir") cfg.output_dir = value;
        else
            throw ConfigError("config: line " + std::to_string(line_no) + ": unknown key '" + key +
                              "'");
    }
    cfg.sampler.rng_seed = cfg.train.seed;
    return cfg;
}

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_text(text);
}

std::string RunConfig::describe_keys() {
    return "Configuration keys (key = value per line, '#' comments):\n"
           "  stacks                (default 4)     dilation-pattern repetitions N\n"
           "  filters               (default 64)    channels k per residual/skip/dilated block\n"
           "  dilation_depth        (default 10)    dilations 1,2,...,2^(depth-1) per stack\n"
           "  target_field          (default 1600)  samples predicted per forward pass\n"
           "  num_outputs           (default 3)     3 = multi-instrument, 1 = singing voice\n"
           "  sample_rate           (default 16000)\n"
           "  post_filters_1        (default 2048)  filters in the first post convolution\n"
           "  post_filters_2        (default 256)   filters in the second post convolution\n"
           "  lr                    (default 0.001) ADAM learning rate\n"
           "  batch_size            (default 10)\n"
           "  patience_epochs       (default 16)    early-stopping patience\n"
           "  steps_per_epoch       (default 1000)\n"
           "  max_epochs            (default 500)\n"
           "  val_segments          (default 100)   fixed validation segment count\n"
           "  seed                  (default 0)\n"
           "  alpha                 (default 0)     dissimilarity loss weight\n"
           "  reduction             (default sum)   loss reduction: sum | mean\n"
           "  p_voiced              (default 0)     fraction of draws forced to contain voice\n"
           "  voiced_rms_threshold  (default 1e-3)  window RMS above which a window counts as voiced\n"
           "  dataset_root                          directory of track subdirectories\n"
           "  manifest                              dataset.json with train/validation/test lists\n"
           "  output_dir            (default out)\n";
}

} // namespace wavesep
