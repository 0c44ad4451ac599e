#ifndef WAVESEP_MODEL_CONFIG_HPP
#define WAVESEP_MODEL_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wavesep/errors.hpp"
#include "wavesep/parameters.hpp"

namespace wavesep {

// Architecture hyper-parameters. Defaults follow the reference setup:
// ten dilated layers per stack (dilations 1..512), 100 ms target field at
// 16 kHz, post-processing convolutions of 2048 and 256 filters.
struct ModelConfig {
    int stacks = 4;          // N: repetitions of the dilation pattern
    int filters = 64;        // k: channels in residual/skip/dilated blocks
    int dilation_depth = 10; // dilations 1, 2, ..., 2^(depth-1) per stack
    int target_field = 1600; // samples predicted per forward pass
    int num_outputs = 3;     // 3 = multi-instrument, 1 = singing voice
    int sample_rate = 16000;
    int post_filters_1 = 2048;
    int post_filters_2 = 256;

    bool operator==(const ModelConfig&) const = default;

    void validate() const;

    std::vector<int> dilations() const; // one stack's pattern

    // Sum over all layers of both-sided dilated spans: 2 * N * sum(dilations).
    int64_t dilation_span() const;

    // Input samples influencing one output sample. The outer 3x1 layers
    // (input projection and the two post convolutions) add 6 on top of the
    // dilated span.
    int64_t receptive_field() const { return dilation_span() + 7; }

    double receptive_field_ms() const {
        return 1000.0 * static_cast<double>(receptive_field()) / sample_rate;
    }

    // Milliseconds as reported in the published architecture table, which
    // counts the dilated span only: round(1000 * 2*N*sum(d) / rate). This is
    // the only convention that reproduces all five published rows
    // (128/256/384/512/639 ms); rounding the full receptive field does not.
    int64_t reported_receptive_ms() const;

    int64_t input_field() const { return target_field + receptive_field() - 1; }
    int64_t half_context() const { return (receptive_field() - 1) / 2; }

    // Declared kernel order: input projection, then per layer the dilated,
    // residual and skip kernels, then the two post convolutions and the
    // output projection. Checkpoints and parameter counts both derive from
    // this list.
    std::vector<std::pair<std::string, KernelShape>> kernel_shapes() const;

    uint64_t parameter_count() const;

    std::vector<std::string> source_names() const;
    std::string residual_source_name() const;

    std::string to_json_string() const;
    static ModelConfig from_json_string(const std::string& text);
};

// One row of the published architecture table.
struct ArchitectureRow {
    int stacks;
    int filters;
    uint64_t parameter_count;
    int64_t receptive_samples;
    int64_t reported_ms;
    int target_field;
};

// The five (stacks, filters) pairs studied in the reference experiments:
// (1,512), (2,256), (3,128), (4,64), (5,32), all with 3 outputs.
std::vector<ArchitectureRow> architecture_table();

} // namespace wavesep

#endif
