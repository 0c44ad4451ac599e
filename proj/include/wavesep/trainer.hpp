#ifndef WAVESEP_TRAINER_HPP
#define WAVESEP_TRAINER_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wavesep/checkpoint.hpp"
#include "wavesep/losses.hpp"
#include "wavesep/sampler.hpp"

namespace wavesep {

struct TrainConfig {
    double lr = 0.001;
    int batch_size = 10;
    int patience_epochs = 16; // stop when validation has not improved this long
    int steps_per_epoch = 1000;
    int max_epochs = 500;
    int val_segments = 100; // size of the fixed validation segment set
    uint64_t seed = 0;

    void validate() const {
        if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (patience_epochs < 1) throw ConfigError("train: patience_epochs must be >= 1");
        if (steps_per_epoch < 1) throw ConfigError("train: steps_per_epoch must be >= 1");
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (val_segments < 1) throw ConfigError("train: val_segments must be >= 1");
    }
};

struct StepResult {
    double loss = 0.0; // training objective, batch mean
    double mae = 0.0;  // plain MAE component, batch mean
};

// One ADAM update from one batch of segments. Per-segment gradients are
// accumulated in batch-index order and averaged, so results do not depend
// on scheduling.
StepResult train_step(Model& model, AdamState<float>& adam, const std::vector<SegmentDraw>& batch,
                      const LossConfig& loss);

// Mean per-segment plain MAE over a fixed segment set; validation always
// scores MAE so runs with different alpha stay comparable.
double validation_loss(const Model& model, const std::vector<SegmentDraw>& segments,
                       Reduction reduction);

struct TrainOutcome {
    Checkpoint best;                  // parameters of the epoch with minimal validation loss
    std::vector<EpochRecord> history; // one record per completed epoch
    int best_epoch = -1;              // index into history; ties resolve to the earliest
    bool diverged = false;
    std::string message;
    int64_t sampler_fallbacks = 0; // voiced draws that fell back to uniform
};

// index of the minimal validation loss, earliest on ties.
int best_epoch_index(const std::vector<EpochRecord>& history);

// Runs epochs of steps_per_epoch batches with early stopping: training
// halts once validation loss has not decreased for patience_epochs
// consecutive epochs (or at max_epochs), and the returned checkpoint is the
// one with the lowest validation loss. Every segment draw uses a stream
// seeded from (seed, epoch, step, batch index), so identical configurations
// reproduce identical histories.
TrainOutcome train(Model& model, const std::vector<TrackStems>& train_tracks,
                   const std::vector<TrackStems>& val_tracks, const TrainConfig& train_cfg,
                   const LossConfig& loss_cfg, const SamplerConfig& sampler_cfg,
                   const std::function<void(int, const EpochRecord&)>& on_epoch = {});

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

} // namespace wavesep

#endif
