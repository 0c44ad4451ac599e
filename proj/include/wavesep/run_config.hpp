#ifndef WAVESEP_RUN_CONFIG_HPP
#define WAVESEP_RUN_CONFIG_HPP

#include <filesystem>
#include <string>

#include "wavesep/losses.hpp"
#include "wavesep/model_config.hpp"
#include "wavesep/sampler.hpp"
#include "wavesep/trainer.hpp"

namespace wavesep {

// Flat `key = value` text configuration ('#' starts a comment). Unknown
// keys are rejected so typos cannot silently fall back to defaults.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    LossConfig loss;
    SamplerConfig sampler;
    std::string dataset_root;
    std::string manifest;
    std::string output_dir = "out";

    static RunConfig parse_file(const std::filesystem::path& path);
    static RunConfig parse_text(const std::string& text);

    // key/default/description triples for --help output
    static std::string describe_keys();
};

} // namespace wavesep

#endif
