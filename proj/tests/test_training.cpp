#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "wavesep/checkpoint.hpp"
#include "wavesep/sampler.hpp"
#include "wavesep/trainer.hpp"

#include "test_util.hpp"

using namespace wavesep;
using test::random_map;

namespace {

// est_v=[0.5,0], ref_v=[1,0]; est_d=[0,1], ref_d=[0,1]  (the worked example)
struct LossExample {
    FeatureMap<float> estimates{2, 2};
    std::vector<FeatureMap<float>> references;

    LossExample() {
        estimates.at(0, 0) = 0.5f;
        estimates.at(0, 1) = 0.0f;
        estimates.at(1, 0) = 0.0f;
        estimates.at(1, 1) = 1.0f;
        FeatureMap<float> v(1, 2), d(1, 2);
        v.at(0, 0) = 1.0f;
        v.at(0, 1) = 0.0f;
        d.at(0, 0) = 0.0f;
        d.at(0, 1) = 1.0f;
        references = {v, d};
    }
};

ModelConfig tiny_config(int num_outputs = 2) {
    ModelConfig cfg;
    cfg.stacks = 1;
    cfg.dilation_depth = 3;
    cfg.filters = 4;
    cfg.target_field = 8;
    cfg.num_outputs = num_outputs;
    cfg.post_filters_1 = 8;
    cfg.post_filters_2 = 6;
    return cfg;
}

TrackStems constant_track(const std::string& name, int64_t length, float vocal_level,
                          float accomp_level) {
    TrackStems t;
    t.name = name;
    t.sample_rate = 16000;
    t.source_names = {"vocals", "accompaniment"};
    t.sources = {std::vector<float>(length, vocal_level),
                 std::vector<float>(length, accomp_level)};
    t.mixture.resize(length);
    for (int64_t i = 0; i < length; ++i) t.mixture[i] = vocal_level + accomp_level;
    return t;
}

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("wavesep_train_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("loss_mae: zero for a perfect estimate") {
    LossExample ex;
    CHECK(loss_mae(ex.estimates, ex.references) >= 0.0);
    CHECK(loss_mae(ex.references[0], {ex.references[0]}) == 0.0);
}

TEST_CASE("loss_mae: worked example under both reductions") {
    LossExample ex;
    CHECK(loss_mae(ex.estimates, ex.references, Reduction::Sum) ==
          doctest::Approx(0.5).epsilon(1e-9));
    CHECK(loss_mae(ex.estimates, ex.references, Reduction::Mean) ==
          doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("loss_total: alpha 0 equals plain MAE bit for bit") {
    LossExample ex;
    LossConfig cfg;
    cfg.alpha = 0.0;
    CHECK(loss_total(ex.estimates, ex.references, cfg) == loss_mae(ex.estimates, ex.references));
}

TEST_CASE("loss_total: worked example gives 0.325") {
    LossExample ex;
    LossConfig cfg;
    cfg.alpha = 0.05;
    CHECK(loss_total(ex.estimates, ex.references, cfg) == doctest::Approx(0.325).epsilon(1e-9));
}

TEST_CASE("loss_total: linear in alpha") {
    LossExample ex;
    LossConfig one;
    one.alpha = 0.03;
    LossConfig two;
    two.alpha = 0.06;
    const double mae = loss_mae(ex.estimates, ex.references);
    const double delta_one = loss_total(ex.estimates, ex.references, one) - mae;
    const double delta_two = loss_total(ex.estimates, ex.references, two) - mae;
    CHECK(delta_two == doctest::Approx(2.0 * delta_one).epsilon(1e-12));
}

TEST_CASE("loss_total: never above MAE for non-negative alpha") {
    Rng rng(50);
    for (int trial = 0; trial < 20; ++trial) {
        const FeatureMap<float> est = random_map<float>(rng, 3, 12);
        std::vector<FeatureMap<float>> refs;
        for (int j = 0; j < 3; ++j) refs.push_back(random_map<float>(rng, 1, 12));
        LossConfig cfg;
        cfg.alpha = rng.uniform(0.0, 0.2);
        CHECK(loss_total(est, refs, cfg) <= loss_mae(est, refs) + 1e-12);
        CHECK(loss_mae(est, refs) >= 0.0);
    }
}

TEST_CASE("loss_total: a single source with alpha > 0 is a configuration error") {
    FeatureMap<float> est(1, 4);
    std::vector<FeatureMap<float>> refs = {FeatureMap<float>(1, 4)};
    LossConfig cfg;
    cfg.alpha = 0.05;
    CHECK_THROWS_AS(loss_total(est, refs, cfg), ConfigError);
}

TEST_CASE("loss shape mismatches are rejected") {
    FeatureMap<float> est(2, 4);
    std::vector<FeatureMap<float>> refs = {FeatureMap<float>(1, 4)};
    CHECK_THROWS_AS(loss_mae(est, refs), ConfigError); // source count mismatch
    refs.push_back(FeatureMap<float>(1, 5));
    CHECK_THROWS_AS(loss_mae(est, refs), ConfigError); // length mismatch
}

TEST_CASE("build_loss: graph values agree with the plain evaluations") {
    Rng rng(33);
    const FeatureMap<float> est = random_map<float>(rng, 2, 10);
    std::vector<FeatureMap<float>> refs;
    refs.push_back(random_map<float>(rng, 1, 10));
    refs.push_back(random_map<float>(rng, 1, 10));
    LossConfig cfg;
    cfg.alpha = 0.05;

    ParameterSet<float> params;
    Graph<float> g(params);
    const LossNodes nodes = build_loss(g, g.constant(est), refs, cfg);
    CHECK(g.scalar(nodes.mae) == doctest::Approx(loss_mae(est, refs)).epsilon(1e-5));
    CHECK(g.scalar(nodes.total) == doctest::Approx(loss_total(est, refs, cfg)).epsilon(1e-5));

    LossConfig plain;
    Graph<float> g2(params);
    const LossNodes nodes2 = build_loss(g2, g2.constant(est), refs, plain);
    CHECK(nodes2.total == nodes2.mae); // same node: alpha 0 is MAE bit for bit
}

TEST_CASE("voiced_regions: all-zero stem has none") {
    const std::vector<float> stem(4000, 0.0f);
    CHECK(voiced_regions(stem, 1e-3, 400).empty());
}

TEST_CASE("voiced_regions: burst is found exactly where a brute-force scan finds it") {
    const int64_t window = 400;
    std::vector<float> stem(20 * window, 0.0f);
    // full-scale 200 ms burst (3200 samples) starting inside window 7
    const int64_t burst_begin = 7 * window + 133;
    const int64_t burst_len = 3200;
    for (int64_t t = burst_begin; t < burst_begin + burst_len; ++t) stem[t] = 1.0f;

    const std::vector<SampleInterval> got = voiced_regions(stem, 1e-3, window);

    // brute-force oracle over the aligned grid
    std::vector<SampleInterval> want;
    for (int64_t begin = 0; begin + window <= static_cast<int64_t>(stem.size()); begin += window) {
        double energy = 0.0;
        for (int64_t t = begin; t < begin + window; ++t) energy += double(stem[t]) * stem[t];
        if (std::sqrt(energy / window) > 1e-3) want.push_back({begin, begin + window});
    }
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].begin == want[i].begin);
        CHECK(got[i].end == want[i].end);
    }
    CHECK(!got.empty());
}

TEST_CASE("voiced_regions: zero threshold is rejected, long window is empty") {
    const std::vector<float> stem(100, 0.5f);
    CHECK_THROWS_AS(voiced_regions(stem, 0.0, 10), ConfigError);
    CHECK(voiced_regions(stem, 1e-3, 101).empty());
}

TEST_CASE("sampler: p_voiced=1 only yields voiced windows when they exist") {
    const ModelConfig cfg = tiny_config();
    TrackStems track = constant_track("t", 4096, 0.0f, 0.1f);
    // one voiced region: samples [512, 520)
    for (int64_t t = 512; t < 520; ++t) track.sources[0][t] = 0.8f;

    SamplerConfig sampler_cfg;
    sampler_cfg.p_voiced = 1.0;
    const SegmentSampler sampler(track, cfg, sampler_cfg);
    Rng rng(10);
    for (int i = 0; i < 200; ++i) {
        const SegmentDraw d = sampler.draw(rng);
        CHECK(d.forced_voiced);
        double energy = 0.0;
        for (const float v : d.references[0].data) energy += double(v) * v;
        CHECK(std::sqrt(energy / cfg.target_field) > sampler_cfg.voiced_rms_threshold);
    }
    CHECK(sampler.fallback_count() == 0);
}

TEST_CASE("sampler: voiceless track with p_voiced>0 falls back and counts") {
    const ModelConfig cfg = tiny_config();
    const TrackStems track = constant_track("t", 1024, 0.0f, 0.1f);
    SamplerConfig sampler_cfg;
    sampler_cfg.p_voiced = 1.0;
    const SegmentSampler sampler(track, cfg, sampler_cfg);
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const SegmentDraw d = sampler.draw(rng);
        CHECK(!d.forced_voiced);
    }
    CHECK(sampler.fallback_count() == 50);
}

TEST_CASE("sampler: draws cover the context with zeros at track edges") {
    const ModelConfig cfg = tiny_config();
    const TrackStems track = constant_track("t", cfg.target_field, 0.25f, 0.25f);
    SamplerConfig sampler_cfg;
    const SegmentSampler sampler(track, cfg, sampler_cfg);
    const SegmentDraw d = sampler.extract(0);
    CHECK(d.input.time_steps == cfg.input_field());
    const int64_t pad = cfg.half_context();
    for (int64_t t = 0; t < pad; ++t) CHECK(d.input.at(0, static_cast<int>(t)) == 0.0f);
    CHECK(d.input.at(0, static_cast<int>(pad)) == 0.5f);
    CHECK(d.references.size() == 2);
    CHECK(d.references[0].time_steps == cfg.target_field);
}

TEST_CASE("sampler: track shorter than one target field is rejected") {
    const ModelConfig cfg = tiny_config();
    const TrackStems track = constant_track("t", cfg.target_field - 1, 0.1f, 0.1f);
    SamplerConfig sampler_cfg;
    CHECK_THROWS_AS(SegmentSampler(track, cfg, sampler_cfg), DatasetError);
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(42);
    AdamState<float> adam = AdamState<float>::make(model.params().param_count());
    adam.step_count = 7;
    std::vector<EpochRecord> history = {{1.5, 2.0}, {1.2, 1.8}};

    const auto dir = temp_dir();
    const auto path_a = dir / "a.ckpt";
    const auto path_b = dir / "b.ckpt";
    save_checkpoint(path_a, Checkpoint::from_model(model, adam, history));
    const Checkpoint loaded = load_checkpoint(path_a);
    save_checkpoint(path_b, loaded);

    std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);
    CHECK(loaded.adam.step_count == 7);
    REQUIRE(loaded.history.size() == 2);
    CHECK(loaded.history[1].val_loss == 1.8);
    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint: corrupting the parameter count is an integrity error") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(43);
    const AdamState<float> adam = AdamState<float>::make(model.params().param_count());

    const auto dir = temp_dir();
    const auto path = dir / "c.ckpt";
    save_checkpoint(path, Checkpoint::from_model(model, adam));

    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    std::string header(12, '\0');
    f.read(header.data(), 12);
    uint32_t json_len = 0;
    std::memcpy(&json_len, header.data() + 8, 4);
    f.seekp(12 + json_len, std::ios::beg); // first byte of the u64 parameter count
    const char flipped = 0x01;
    f.write(&flipped, 1);
    f.close();

    CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint: truncation is an integrity error naming an offset") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(44);
    const AdamState<float> adam = AdamState<float>::make(model.params().param_count());

    const auto dir = temp_dir();
    const auto path = dir / "d.ckpt";
    save_checkpoint(path, Checkpoint::from_model(model, adam));
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    try {
        load_checkpoint(path);
        FAIL("expected an integrity error");
    } catch (const IntegrityError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint: config mismatch is a configuration error") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(45);
    const AdamState<float> adam = AdamState<float>::make(model.params().param_count());

    const auto dir = temp_dir();
    const auto path = dir / "e.ckpt";
    save_checkpoint(path, Checkpoint::from_model(model, adam));
    ModelConfig other = cfg;
    other.filters = 8;
    CHECK_THROWS_AS(load_checkpoint(path, &other), ConfigError);
    CHECK_NOTHROW(load_checkpoint(path, &cfg));
    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint: reload reproduces separate_track bit for bit") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(46);
    const AdamState<float> adam = AdamState<float>::make(model.params().param_count());

    const auto dir = temp_dir();
    const auto path = dir / "f.ckpt";
    save_checkpoint(path, Checkpoint::from_model(model, adam));
    const Model reloaded = load_checkpoint(path).to_model();

    Rng rng(12);
    std::vector<float> mixture(3 * cfg.target_field + 5);
    for (float& v : mixture) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    const SourceEstimates a = separate_track(model, mixture, cfg.sample_rate);
    const SourceEstimates b = separate_track(reloaded, mixture, cfg.sample_rate);
    for (size_t s = 0; s < a.waveforms.size(); ++s)
        CHECK(std::memcmp(a.waveforms[s].data(), b.waveforms[s].data(),
                          mixture.size() * sizeof(float)) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("train config: zero patience is rejected") {
    TrainConfig cfg;
    cfg.patience_epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("best_epoch_index: argmin with ties resolved to the earliest epoch") {
    CHECK(best_epoch_index({{0, 3.0}, {0, 1.0}, {0, 2.0}}) == 1);
    CHECK(best_epoch_index({{0, 2.0}, {0, 1.0}, {0, 1.0}}) == 1);
    CHECK(best_epoch_index({{0, 1.0}, {0, 1.0}}) == 0);
}

TEST_CASE("train: loss decreases on an easy synthetic task") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(1);

    const TrackStems track = test::synthetic_voice_track(5, 4096);
    TrainConfig train_cfg;
    train_cfg.batch_size = 4;
    train_cfg.steps_per_epoch = 30;
    train_cfg.max_epochs = 4;
    train_cfg.patience_epochs = 16;
    train_cfg.val_segments = 8;
    train_cfg.seed = 7;
    const LossConfig loss_cfg;
    const SamplerConfig sampler_cfg;

    const TrainOutcome outcome = train(model, {track}, {track}, train_cfg, loss_cfg, sampler_cfg);
    REQUIRE(outcome.history.size() == 4);
    CHECK(!outcome.diverged);
    CHECK(outcome.history.back().train_loss < outcome.history.front().train_loss);
    CHECK(outcome.best_epoch == best_epoch_index(outcome.history));
}

TEST_CASE("train: identical seeds give identical histories") {
    const ModelConfig cfg = tiny_config();
    const TrackStems track = test::synthetic_voice_track(6, 2048);
    TrainConfig train_cfg;
    train_cfg.batch_size = 2;
    train_cfg.steps_per_epoch = 5;
    train_cfg.max_epochs = 3;
    train_cfg.val_segments = 4;
    train_cfg.seed = 99;

    std::vector<EpochRecord> runs[2];
    for (int r = 0; r < 2; ++r) {
        Model model = Model::build(cfg);
        model.init_weights(train_cfg.seed);
        runs[r] = train(model, {track}, {track}, train_cfg, LossConfig{}, SamplerConfig{}).history;
    }
    REQUIRE(runs[0].size() == runs[1].size());
    for (size_t i = 0; i < runs[0].size(); ++i) {
        CHECK(runs[0][i].train_loss == runs[1][i].train_loss);
        CHECK(runs[0][i].val_loss == runs[1][i].val_loss);
    }
}

TEST_CASE("train: early stopping halts after patience epochs without improvement") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(2);
    // constant stems make every epoch equally good: no strict improvement
    // after the early epochs, so patience cuts the run well short of max
    const TrackStems track = constant_track("t", 1024, 0.2f, 0.1f);

    TrainConfig train_cfg;
    train_cfg.batch_size = 2;
    train_cfg.steps_per_epoch = 2;
    train_cfg.max_epochs = 50;
    train_cfg.patience_epochs = 2;
    train_cfg.val_segments = 3;
    const TrainOutcome outcome =
        train(model, {track}, {track}, train_cfg, LossConfig{}, SamplerConfig{});
    CHECK(static_cast<int>(outcome.history.size()) < train_cfg.max_epochs);
    CHECK(static_cast<int>(outcome.history.size()) >
          outcome.best_epoch + train_cfg.patience_epochs - 1);
}

TEST_CASE("train: absurd learning rate reports divergence with the last good checkpoint") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(3);
    const TrackStems track = test::synthetic_voice_track(7, 2048);

    TrainConfig train_cfg;
    train_cfg.lr = 1e30;
    train_cfg.batch_size = 2;
    train_cfg.steps_per_epoch = 10;
    train_cfg.max_epochs = 5;
    train_cfg.val_segments = 4;
    const TrainOutcome outcome =
        train(model, {track}, {track}, train_cfg, LossConfig{}, SamplerConfig{});
    CHECK(outcome.diverged);
    CHECK(!outcome.message.empty());
    CHECK(outcome.best.parameters.size() == cfg.parameter_count());
}

TEST_CASE("history CSV: deterministic formatting") {
    const auto dir = temp_dir();
    const auto path = dir / "h.csv";
    write_history_csv(path, {{1.25, 2.5}, {0.5, 0.75}});
    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text == "epoch,train_loss,val_loss\n0,1.25,2.5\n1,0.5,0.75\n");
    std::filesystem::remove_all(dir);
}
