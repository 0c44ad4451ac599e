#include "wavesep/model_config.hpp"

#include <cmath>

#include <json.hpp>

namespace wavesep {

void ModelConfig::validate() const {
    if (stacks < 1) throw ConfigError("config: stacks must be >= 1");
    if (filters < 1) throw ConfigError("config: filters must be >= 1");
    if (dilation_depth < 1 || dilation_depth > 30)
        throw ConfigError("config: dilation_depth must lie in [1, 30]");
    if (target_field < 1) throw ConfigError("config: target_field must be >= 1");
    if (num_outputs < 1) throw ConfigError("config: num_outputs must be >= 1");
    if (sample_rate < 1) throw ConfigError("config: sample_rate must be >= 1");
    if (post_filters_1 < 1 || post_filters_2 < 1)
        throw ConfigError("config: post filter counts must be >= 1");
}

std::vector<int> ModelConfig::dilations() const {
    std::vector<int> d(dilation_depth);
    for (int i = 0; i < dilation_depth; ++i) d[i] = 1 << i;
    return d;
}

int64_t ModelConfig::dilation_span() const {
    int64_t per_stack = 0;
    for (const int d : dilations()) per_stack += d;
    return 2 * static_cast<int64_t>(stacks) * per_stack;
}

int64_t ModelConfig::reported_receptive_ms() const {
    return std::llround(1000.0 * static_cast<double>(dilation_span()) / sample_rate);
}

std::vector<std::pair<std::string, KernelShape>> ModelConfig::kernel_shapes() const {
    validate();
    std::vector<std::pair<std::string, KernelShape>> out;
    out.emplace_back("input_proj", KernelShape{filters, 1, 3});
    const std::vector<int> ds = dilations();
    for (int s = 0; s < stacks; ++s) {
        for (int i = 0; i < dilation_depth; ++i) {
            const std::string tag = std::to_string(s) + "." + std::to_string(i);
            out.emplace_back("layer" + tag + ".dilated", KernelShape{2 * filters, filters, 3});
            out.emplace_back("layer" + tag + ".residual", KernelShape{filters, filters, 1});
            out.emplace_back("layer" + tag + ".skip", KernelShape{filters, filters, 1});
        }
    }
    out.emplace_back("post1", KernelShape{post_filters_1, filters, 3});
    out.emplace_back("post2", KernelShape{post_filters_2, post_filters_1, 3});
    out.emplace_back("output_proj", KernelShape{num_outputs, post_filters_2, 1});
    return out;
}

uint64_t ModelConfig::parameter_count() const {
    uint64_t total = 0;
    for (const auto& [name, shape] : kernel_shapes()) total += shape.param_count();
    return total;
}

std::vector<std::string> ModelConfig::source_names() const {
    if (num_outputs == 1) return {"vocals"};
    if (num_outputs == 2) return {"vocals", "accompaniment"};
    if (num_outputs == 3) return {"vocals", "drums", "bass"};
    std::vector<std::string> names;
    for (int i = 0; i < num_outputs; ++i) names.push_back("source" + std::to_string(i + 1));
    return names;
}

std::string ModelConfig::residual_source_name() const {
    return num_outputs == 1 ? "accompaniment" : "other";
}

std::string ModelConfig::to_json_string() const {
    nlohmann::json j;
    j["stacks"] = stacks;
    j["filters"] = filters;
    j["dilation_depth"] = dilation_depth;
    j["target_field"] = target_field;
    j["num_outputs"] = num_outputs;
    j["sample_rate"] = sample_rate;
    j["post_filters_1"] = post_filters_1;
    j["post_filters_2"] = post_filters_2;
    return j.dump();
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("config JSON: ") + e.what());
    }
    ModelConfig cfg;
    try {
        j.at("stacks").get_to(cfg.stacks);
        j.at("filters").get_to(cfg.filters);
        j.at("dilation_depth").get_to(cfg.dilation_depth);
        j.at("target_field").get_to(cfg.target_field);
        j.at("num_outputs").get_to(cfg.num_outputs);
        j.at("sample_rate").get_to(cfg.sample_rate);
        j.at("post_filters_1").get_to(cfg.post_filters_1);
        j.at("post_filters_2").get_to(cfg.post_filters_2);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("config JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::vector<ArchitectureRow> architecture_table() {
    std::vector<ArchitectureRow> rows;
    const int filter_grid[] = {512, 256, 128, 64, 32};
    for (int n = 1; n <= 5; ++n) {
        ModelConfig cfg;
        cfg.stacks = n;
        cfg.filters = filter_grid[n - 1];
        cfg.num_outputs = 3;
        rows.push_back(ArchitectureRow{cfg.stacks, cfg.filters, cfg.parameter_count(),
                                       cfg.receptive_field(), cfg.reported_receptive_ms(),
                                       cfg.target_field});
    }
    return rows;
}

} // namespace wavesep
