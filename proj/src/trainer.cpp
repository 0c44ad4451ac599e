#include "wavesep/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace wavesep {

StepResult train_step(Model& model, AdamState<float>& adam, const std::vector<SegmentDraw>& batch,
                      const LossConfig& loss) {
    if (batch.empty()) throw ConfigError("train_step: empty batch");
    std::vector<float> grads(model.params().param_count(), 0.0f);
    StepResult result;
    for (const SegmentDraw& item : batch) {
        Graph<float> g(model.params());
        const int estimates = model.forward(g, g.constant(item.input));
        const LossNodes nodes = build_loss(g, estimates, item.references, loss);
        g.backward(nodes.total, grads);
        result.loss += g.scalar(nodes.total);
        result.mae += g.scalar(nodes.mae);
    }
    const float inv = 1.0f / static_cast<float>(batch.size());
    for (float& g : grads) g *= inv;
    result.loss /= static_cast<double>(batch.size());
    result.mae /= static_cast<double>(batch.size());
    if (!std::isfinite(result.loss))
        throw DivergedError("train_step: non-finite batch loss");
    adam_step(model.params().flat(), std::span<const float>(grads), adam);
    return result;
}

double validation_loss(const Model& model, const std::vector<SegmentDraw>& segments,
                       Reduction reduction) {
    if (segments.empty()) throw ConfigError("validation_loss: empty segment set");
    double acc = 0.0;
    for (const SegmentDraw& item : segments)
        acc += loss_mae(model.forward(item.input), item.references, reduction);
    return acc / static_cast<double>(segments.size());
}

int best_epoch_index(const std::vector<EpochRecord>& history) {
    if (history.empty()) return -1;
    int best = 0;
    for (int i = 1; i < static_cast<int>(history.size()); ++i)
        if (history[i].val_loss < history[best].val_loss) best = i;
    return best;
}

TrainOutcome train(Model& model, const std::vector<TrackStems>& train_tracks,
                   const std::vector<TrackStems>& val_tracks, const TrainConfig& train_cfg,
                   const LossConfig& loss_cfg, const SamplerConfig& sampler_cfg,
                   const std::function<void(int, const EpochRecord&)>& on_epoch) {
    train_cfg.validate();
    loss_cfg.validate();
    sampler_cfg.validate();
    if (train_tracks.empty()) throw DatasetError("train: no training tracks");
    if (val_tracks.empty()) throw DatasetError("train: no validation tracks");

    std::vector<SegmentSampler> train_samplers;
    for (const TrackStems& t : train_tracks)
        train_samplers.emplace_back(t, model.config(), sampler_cfg);
    std::vector<SegmentSampler> val_samplers;
    for (const TrackStems& t : val_tracks)
        val_samplers.emplace_back(t, model.config(), sampler_cfg);

    // Fixed validation set: seed-deterministic uniform draws, unaffected by
    // the voiced-sampling strategy.
    std::vector<SegmentDraw> val_set;
    val_set.reserve(train_cfg.val_segments);
    for (int v = 0; v < train_cfg.val_segments; ++v) {
        Rng rng(derive_seed(train_cfg.seed, 0x7a11d, static_cast<uint64_t>(v)));
        const SegmentSampler& s = val_samplers[rng.below(val_samplers.size())];
        val_set.push_back(s.extract(static_cast<int64_t>(rng.below(
            static_cast<uint64_t>(s.valid_offsets())))));
    }

    AdamState<float> adam = AdamState<float>::make(model.params().param_count(), train_cfg.lr);

    TrainOutcome out;
    Checkpoint best;
    bool have_best = false;

    for (int epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
        double epoch_loss = 0.0;
        try {
            for (int step = 0; step < train_cfg.steps_per_epoch; ++step) {
                std::vector<SegmentDraw> batch;
                batch.reserve(train_cfg.batch_size);
                for (int b = 0; b < train_cfg.batch_size; ++b) {
                    Rng rng(derive_seed(train_cfg.seed, static_cast<uint64_t>(epoch),
                                        static_cast<uint64_t>(step), static_cast<uint64_t>(b)));
                    const SegmentSampler& s = train_samplers[rng.below(train_samplers.size())];
                    batch.push_back(s.draw(rng));
                }
                epoch_loss += train_step(model, adam, batch, loss_cfg).loss;
            }
        } catch (const DivergedError& e) {
            out.diverged = true;
            out.message = e.what();
            break;
        }

        EpochRecord record;
        record.train_loss = epoch_loss / train_cfg.steps_per_epoch;
        record.val_loss = validation_loss(model, val_set, loss_cfg.reduction);
        out.history.push_back(record);
        if (on_epoch) on_epoch(epoch, record);

        if (!std::isfinite(record.val_loss)) {
            out.diverged = true;
            out.message = "train: non-finite validation loss";
            break;
        }

        const int best_idx = best_epoch_index(out.history);
        if (best_idx == epoch) {
            best = Checkpoint::from_model(model, adam, out.history);
            have_best = true;
        }
        if (epoch - best_idx >= train_cfg.patience_epochs) break; // early stopping
    }

    for (const SegmentSampler& s : train_samplers) out.sampler_fallbacks += s.fallback_count();
    if (!have_best) {
        if (!out.diverged) throw DivergedError("train: no epoch produced a finite validation loss");
        best = Checkpoint::from_model(model, adam, out.history);
    }
    best.history = out.history;
    out.best = std::move(best);
    out.best_epoch = best_epoch_index(out.history);
    return out;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochRecord>& history) {
    std::string text = "epoch,train_loss,val_loss\n";
    char line[128];
    for (size_t i = 0; i < history.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g\n", i, history[i].train_loss,
                      history[i].val_loss);
        text += line;
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw IntegrityError("history: cannot open " + tmp.string() + " for writing");
        f << text;
        if (!f) throw IntegrityError("history: write failed on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IntegrityError("history: cannot move " + tmp.string() + " to " + path.string() +
                             ": " + ec.message());
}

} // namespace wavesep
