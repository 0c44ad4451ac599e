#ifndef WAVESEP_CHECKPOINT_HPP
#define WAVESEP_CHECKPOINT_HPP

#include <filesystem>
#include <vector>

#include "wavesep/adam.hpp"
#include "wavesep/model.hpp"

namespace wavesep {

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

// Everything needed to resume or run a trained model. The file layout is
// fixed and little-endian:
//   magic "WSSM"
//   u32 version (= 1)
//   u32 config JSON length, then that many bytes of UTF-8 JSON
//   u64 parameter count, then parameters as f32 in declared kernel order
//   u64 ADAM step count; f64 lr, beta1, beta2, epsilon;
//     first moments as f32 x count, second moments as f32 x count
//   u32 history length, then per epoch f64 train loss, f64 val loss
// The total file size is implied exactly by the header fields; any
// disagreement is rejected as corruption.
struct Checkpoint {
    ModelConfig config;
    std::vector<float> parameters;
    AdamState<float> adam;
    std::vector<EpochRecord> history;

    static Checkpoint from_model(const Model& model, const AdamState<float>& adam,
                                 std::vector<EpochRecord> history = {});
    Model to_model() const;
};

// Atomic write (temp file + rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// expected_config, when given, must match the stored config exactly.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig* expected_config = nullptr);

} // namespace wavesep

#endif
