#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "wavesep/model.hpp"

#include "test_util.hpp"

using namespace wavesep;
using test::random_map;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.stacks = 1;
    cfg.dilation_depth = 3;
    cfg.filters = 4;
    cfg.target_field = 8;
    cfg.num_outputs = 2;
    cfg.post_filters_1 = 8;
    cfg.post_filters_2 = 6;
    return cfg;
}

ModelConfig defaults_with_stacks(int n, int k = 64) {
    ModelConfig cfg;
    cfg.stacks = n;
    cfg.filters = k;
    cfg.num_outputs = 3;
    return cfg;
}

} // namespace

TEST_CASE("receptive_field: defaults follow 2046*N + 7") {
    for (int n = 1; n <= 5; ++n)
        CHECK(defaults_with_stacks(n).receptive_field() == 2046 * n + 7);
    CHECK(defaults_with_stacks(1).receptive_field() == 2053);
    CHECK(defaults_with_stacks(4).receptive_field() == 8191);
    CHECK(defaults_with_stacks(5).receptive_field() == 10237);
}

TEST_CASE("receptive_field: exact milliseconds at 16 kHz") {
    CHECK(defaults_with_stacks(1).receptive_field_ms() == doctest::Approx(128.3125));
    CHECK(defaults_with_stacks(5).receptive_field_ms() == doctest::Approx(639.8125));
}

TEST_CASE("receptive_field: reported milliseconds reproduce the published table") {
    const int64_t expected[] = {128, 256, 384, 512, 639};
    for (int n = 1; n <= 5; ++n)
        CHECK(defaults_with_stacks(n).reported_receptive_ms() == expected[n - 1]);
}

TEST_CASE("parameter_count: hand-counted value for 1 stack of 512 filters") {
    ModelConfig cfg = defaults_with_stacks(1, 512);
    CHECK(cfg.parameter_count() == 25'715'715ULL);
}

TEST_CASE("parameter_count: 4 stacks of 64 filters lands near 3.3M") {
    const uint64_t count = defaults_with_stacks(4, 64).parameter_count();
    CHECK(count >= 3'250'000ULL);
    CHECK(count <= 3'350'000ULL);
}

TEST_CASE("parameter_count: tiny closed-form enumeration") {
    ModelConfig cfg;
    cfg.stacks = 1;
    cfg.dilation_depth = 1;
    cfg.filters = 1;
    cfg.num_outputs = 1;
    cfg.post_filters_1 = 1;
    cfg.post_filters_2 = 1;
    // independent enumeration: input 1->1 w3 (4), dilated 1->2 w3 (8),
    // residual 1x1 (2), skip 1x1 (2), post1 1->1 w3 (4), post2 1->1 w3 (4),
    // output 1->1 w1 (2)
    CHECK(cfg.parameter_count() == 4 + 8 + 2 + 2 + 4 + 4 + 2);
}

TEST_CASE("parameter_count: matches the parameters a built model actually owns") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::build(cfg);
    CHECK(model.params().param_count() == cfg.parameter_count());
}

TEST_CASE("architecture table: five rows with the published budgets") {
    const std::vector<ArchitectureRow> rows = architecture_table();
    REQUIRE(rows.size() == 5);
    const double approx_params[] = {25.7e6, 13.6e6, 6.3e6, 3.3e6, 2.2e6};
    const int64_t ms[] = {128, 256, 384, 512, 639};
    for (int i = 0; i < 5; ++i) {
        CHECK(rows[i].reported_ms == ms[i]);
        CHECK(rows[i].target_field == 1600);
        // the 2-stack row exceeds its published approximation by 6067
        // parameters (13,656,067 vs 13.6M); every other row is within 0.05M
        if (i == 1)
            CHECK(rows[i].parameter_count == 13'656'067ULL);
        else
            CHECK(std::abs(static_cast<double>(rows[i].parameter_count) - approx_params[i]) <=
                  0.05e6);
    }
}

TEST_CASE("config validation rejects non-positive dimensions") {
    ModelConfig cfg;
    cfg.stacks = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ModelConfig{};
    cfg.target_field = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("forward: zero output projection gives all-zero estimates") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(3);
    for (float& w : model.params().weights(model.output_kernel())) w = 0.0f;
    for (float& b : model.params().bias(model.output_kernel())) b = 0.0f;

    Rng rng(4);
    const FeatureMap<float> out =
        model.forward(random_map<float>(rng, 1, static_cast<int>(cfg.input_field())));
    for (const float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("forward: output shape is (num_outputs, target_field) over random tiny configs") {
    Rng rng(21);
    for (int trial = 0; trial < 8; ++trial) {
        ModelConfig cfg;
        cfg.stacks = 1 + static_cast<int>(rng.below(2));
        cfg.dilation_depth = 1 + static_cast<int>(rng.below(4));
        cfg.filters = 1 + static_cast<int>(rng.below(5));
        cfg.target_field = 1 + static_cast<int>(rng.below(16));
        cfg.num_outputs = 1 + static_cast<int>(rng.below(3));
        cfg.post_filters_1 = 1 + static_cast<int>(rng.below(6));
        cfg.post_filters_2 = 1 + static_cast<int>(rng.below(6));
        Model model = Model::build(cfg);
        model.init_weights(trial);
        const FeatureMap<float> out =
            model.forward(random_map<float>(rng, 1, static_cast<int>(cfg.input_field())));
        CHECK(out.channels == cfg.num_outputs);
        CHECK(out.time_steps == cfg.target_field);
        CHECK(out.all_finite());
    }
}

TEST_CASE("forward: wrong segment length is a shape error") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(1);
    CHECK_THROWS_AS(model.forward(FeatureMap<float>(1, static_cast<int>(cfg.input_field()) - 1)),
                    ConfigError);
}

TEST_CASE("separate_track: output length equals input length") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(9);

    Rng rng(2);
    SUBCASE("exactly three tiles") {
        std::vector<float> mixture(3 * cfg.target_field);
        for (float& x : mixture) x = static_cast<float>(rng.uniform(-0.5, 0.5));
        const SourceEstimates est = separate_track(model, mixture, cfg.sample_rate);
        CHECK(est.names.size() == 2);
        for (const auto& w : est.waveforms) CHECK(w.size() == mixture.size());
    }
    SUBCASE("one sample past a tile boundary") {
        std::vector<float> mixture(cfg.target_field + 1, 0.25f);
        const SourceEstimates est = separate_track(model, mixture, cfg.sample_rate);
        for (const auto& w : est.waveforms) CHECK(w.size() == mixture.size());
    }
    SUBCASE("random lengths") {
        for (int trial = 0; trial < 10; ++trial) {
            const size_t len = 1 + rng.below(5 * cfg.target_field);
            std::vector<float> mixture(len);
            for (float& x : mixture) x = static_cast<float>(rng.uniform(-0.5, 0.5));
            const SourceEstimates est = separate_track(model, mixture, cfg.sample_rate);
            for (const auto& w : est.waveforms) CHECK(w.size() == len);
        }
    }
}

TEST_CASE("separate_track: zero mixture through a zero-bias model stays zero") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(5); // init leaves every bias at zero
    const std::vector<float> mixture(2 * cfg.target_field, 0.0f);
    const SourceEstimates est = separate_track(model, mixture, cfg.sample_rate);
    for (const auto& w : est.waveforms)
        for (const float v : w) CHECK(v == 0.0f);
}

TEST_CASE("separate_track: sample-rate mismatch is a configuration error") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(5);
    const std::vector<float> mixture(cfg.target_field, 0.0f);
    CHECK_THROWS_AS(separate_track(model, mixture, 44100), ConfigError);
}

TEST_CASE("separate_track: shifting the input by one target field shifts the output") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(13);

    Rng rng(31);
    std::vector<float> x(3 * cfg.target_field);
    for (float& v : x) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    std::vector<float> shifted(cfg.target_field, 0.0f);
    shifted.insert(shifted.end(), x.begin(), x.end());

    const SourceEstimates base = separate_track(model, x, cfg.sample_rate);
    const SourceEstimates moved = separate_track(model, shifted, cfg.sample_rate);
    for (size_t s = 0; s < base.waveforms.size(); ++s)
        for (size_t t = 0; t < x.size(); ++t)
            CHECK(moved.waveforms[s][t + cfg.target_field] == base.waveforms[s][t]);
}

TEST_CASE("separate_track: tiles agree across thread counts") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::build(cfg);
    model.init_weights(17);
    Rng rng(8);
    std::vector<float> mixture(4 * cfg.target_field + 7);
    for (float& v : mixture) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    const SourceEstimates serial = separate_track(model, mixture, cfg.sample_rate, 1);
    const SourceEstimates threaded = separate_track(model, mixture, cfg.sample_rate, 4);
    for (size_t s = 0; s < serial.waveforms.size(); ++s)
        CHECK(std::memcmp(serial.waveforms[s].data(), threaded.waveforms[s].data(),
                          mixture.size() * sizeof(float)) == 0);
}

TEST_CASE("complete_sources: residual makes the set sum back to the mixture") {
    SUBCASE("estimates already sum to the mixture") {
        SourceEstimates est;
        est.names = {"vocals"};
        est.waveforms = {{0.5f, -0.25f}};
        const std::vector<float> mixture = {0.5f, -0.25f};
        const SourceEstimates full = complete_sources(mixture, est, "accompaniment");
        REQUIRE(full.names.size() == 2);
        CHECK(full.names.back() == "accompaniment");
        CHECK(full.waveforms.back()[0] == 0.0f);
        CHECK(full.waveforms.back()[1] == 0.0f);
    }
    SUBCASE("scalar arithmetic") {
        SourceEstimates est;
        est.names = {"vocals"};
        est.waveforms = {{0.4f}};
        const std::vector<float> mixture = {1.0f};
        const SourceEstimates full = complete_sources(mixture, est, "accompaniment");
        CHECK(full.waveforms.back()[0] == doctest::Approx(0.6).epsilon(1e-7));
    }
    SUBCASE("random three-source reconstruction within 1e-6") {
        Rng rng(3);
        const size_t len = 257;
        std::vector<float> mixture(len);
        for (float& v : mixture) v = static_cast<float>(rng.uniform(-1, 1));
        SourceEstimates est;
        est.names = {"vocals", "drums", "bass"};
        for (int s = 0; s < 3; ++s) {
            std::vector<float> w(len);
            for (float& v : w) v = static_cast<float>(rng.uniform(-1, 1));
            est.waveforms.push_back(std::move(w));
        }
        const SourceEstimates full = complete_sources(mixture, est, "other");
        REQUIRE(full.names.size() == 4);
        for (size_t t = 0; t < len; ++t) {
            float sum = 0.0f;
            for (const auto& w : full.waveforms) sum += w[t];
            CHECK(std::abs(sum - mixture[t]) <= 1e-6f);
        }
    }
    SUBCASE("length mismatch is a shape error") {
        SourceEstimates est;
        est.names = {"vocals"};
        est.waveforms = {{0.1f, 0.2f}};
        const std::vector<float> mixture = {1.0f};
        CHECK_THROWS_AS(complete_sources(mixture, est, "accompaniment"), ConfigError);
    }
}

TEST_CASE("source naming follows the output count") {
    ModelConfig multi = defaults_with_stacks(4);
    CHECK(multi.source_names() == std::vector<std::string>{"vocals", "drums", "bass"});
    CHECK(multi.residual_source_name() == "other");
    ModelConfig voice = defaults_with_stacks(4);
    voice.num_outputs = 1;
    CHECK(voice.source_names() == std::vector<std::string>{"vocals"});
    CHECK(voice.residual_source_name() == "accompaniment");
}
