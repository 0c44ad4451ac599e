// wavesep: waveform-domain music source separation toolkit.
//
// Subcommands: inspect, mix, train, separate, evaluate, report.
// Exit codes: 0 success, 2 configuration error, 3 dataset error,
// 4 numeric divergence, 5 I/O integrity error.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wavesep/bss_eval.hpp"
#include "wavesep/checkpoint.hpp"
#include "wavesep/dataset.hpp"
#include "wavesep/model.hpp"
#include "wavesep/run_config.hpp"
#include "wavesep/trainer.hpp"
#include "wavesep/wav_io.hpp"

namespace {

using namespace wavesep;

struct InspectOptions {
    std::string config_path;
    bool table1 = false;
    bool as_json = false;
    int stacks = 0;
    int filters = 0;
    bool stacks_set = false;
    bool filters_set = false;
};

nlohmann::json config_report(const ModelConfig& cfg) {
    nlohmann::json j;
    j["stacks"] = cfg.stacks;
    j["layers"] = cfg.stacks * cfg.dilation_depth;
    j["filters"] = cfg.filters;
    j["parameter_count"] = cfg.parameter_count();
    j["receptive_field_samples"] = cfg.receptive_field();
    j["receptive_field_ms"] = cfg.reported_receptive_ms();
    j["receptive_field_ms_exact"] = cfg.receptive_field_ms();
    j["input_field_samples"] = cfg.input_field();
    j["target_field_samples"] = cfg.target_field;
    j["num_outputs"] = cfg.num_outputs;
    j["sample_rate"] = cfg.sample_rate;
    return j;
}

void print_config_row(const ModelConfig& cfg) {
    char field[64];
    std::snprintf(field, sizeof(field), "%lld samples / %lld ms",
                  static_cast<long long>(cfg.receptive_field()),
                  static_cast<long long>(cfg.reported_receptive_ms()));
    std::printf("%-7d %-7d %-8d %-12llu %-24s %d samples / %lld ms\n", cfg.stacks,
                cfg.stacks * cfg.dilation_depth, cfg.filters,
                static_cast<unsigned long long>(cfg.parameter_count()), field, cfg.target_field,
                static_cast<long long>(std::llround(1000.0 * cfg.target_field / cfg.sample_rate)));
}

int run_inspect(const InspectOptions& opt) {
    std::vector<ModelConfig> configs;
    if (opt.table1) {
        const int filter_grid[] = {512, 256, 128, 64, 32};
        for (int n = 1; n <= 5; ++n) {
            ModelConfig cfg;
            cfg.stacks = n;
            cfg.filters = filter_grid[n - 1];
            cfg.num_outputs = 3;
            configs.push_back(cfg);
        }
    } else {
        ModelConfig cfg;
        if (!opt.config_path.empty()) cfg = RunConfig::parse_file(opt.config_path).model;
        if (opt.stacks_set) cfg.stacks = opt.stacks;
        if (opt.filters_set) cfg.filters = opt.filters;
        cfg.validate();
        configs.push_back(cfg);
    }

    if (opt.as_json) {
        nlohmann::json j = nlohmann::json::array();
        for (const ModelConfig& cfg : configs) j.push_back(config_report(cfg));
        std::printf("%s\n", j.dump(2).c_str());
        return 0;
    }
    std::printf("%-7s %-7s %-8s %-12s %-24s %s\n", "stacks", "layers", "filters", "params",
                "receptive_field", "target_field");
    for (const ModelConfig& cfg : configs) print_config_row(cfg);
    return 0;
}

int run_mix(const std::string& dataset_root, int sample_rate) {
    const std::vector<TrackStems> tracks = load_stem_directory(dataset_root, sample_rate);
    if (tracks.empty()) throw DatasetError("mix: no tracks under " + dataset_root);
    for (const TrackStems& track : tracks) {
        std::vector<float> mixture(track.length(), 0.0f);
        for (const std::vector<float>& stem : track.sources)
            for (size_t t = 0; t < mixture.size(); ++t) mixture[t] += stem[t];
        for (float& x : mixture) x = std::clamp(x, -1.0f, 1.0f);
        write_wav(std::filesystem::path(dataset_root) / track.name / "mixture.wav", mixture,
                  track.sample_rate);
        std::printf("mixed %s (%lld samples)\n", track.name.c_str(),
                    static_cast<long long>(track.length()));
    }
    return 0;
}

int run_train(const std::string& config_path) {
    const RunConfig cfg = RunConfig::parse_file(config_path);
    cfg.model.validate();
    cfg.train.validate();
    cfg.loss.validate();
    cfg.sampler.validate();
    if (cfg.dataset_root.empty()) throw ConfigError("train: config must set dataset_root");
    if (cfg.manifest.empty()) throw ConfigError("train: config must set manifest");

    const std::vector<TrackStems> all = load_stem_directory(cfg.dataset_root, cfg.model.sample_rate);
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    if (manifest.train.empty() || manifest.validation.empty())
        throw DatasetError("train: manifest needs non-empty train and validation lists");
    const std::vector<TrackStems> train_tracks = select_tracks(all, manifest.train);
    const std::vector<TrackStems> val_tracks = select_tracks(all, manifest.validation);

    Model model = Model::build(cfg.model);
    model.init_weights(cfg.train.seed);

    std::filesystem::create_directories(cfg.output_dir);
    const TrainOutcome outcome =
        train(model, train_tracks, val_tracks, cfg.train, cfg.loss, cfg.sampler,
              [](int epoch, const EpochRecord& r) {
                  std::printf("epoch %d: train %.6g val %.6g\n", epoch, r.train_loss, r.val_loss);
                  std::fflush(stdout);
              });

    const std::filesystem::path out(cfg.output_dir);
    save_checkpoint(out / "best.ckpt", outcome.best);
    write_history_csv(out / "loss_history.csv", outcome.history);
    if (outcome.sampler_fallbacks > 0)
        std::fprintf(stderr, "warning: %lld voiced draws fell back to uniform (no voiced regions)\n",
                     static_cast<long long>(outcome.sampler_fallbacks));
    if (outcome.diverged) {
        std::fprintf(stderr, "error: training diverged: %s (best checkpoint saved)\n",
                     outcome.message.c_str());
        return kExitDiverged;
    }
    std::printf("best epoch %d (val %.6g), checkpoint at %s\n", outcome.best_epoch,
                outcome.history[outcome.best_epoch].val_loss, (out / "best.ckpt").c_str());
    return 0;
}

int run_separate(const std::string& checkpoint_path, const std::string& input_path,
                 const std::string& output_dir, int threads) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Model model = ckpt.to_model();
    const WavData wav = read_wav(input_path);
    const SourceEstimates raw =
        separate_track(model, wav.samples, wav.sample_rate, threads);
    const SourceEstimates full =
        complete_sources(wav.samples, raw, model.config().residual_source_name());

    std::filesystem::create_directories(output_dir);
    for (size_t s = 0; s < full.names.size(); ++s) {
        const std::filesystem::path path =
            std::filesystem::path(output_dir) / (full.names[s] + ".wav");
        write_wav(path, full.waveforms[s], wav.sample_rate);
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

int run_evaluate(const std::string& estimates_dir, const std::string& references_root,
                 const std::string& manifest_path, int filter_length, const std::string& label,
                 const std::string& output_base, int threads, int sample_rate) {
    std::vector<TrackStems> references = load_stem_directory(references_root, sample_rate);
    if (!manifest_path.empty()) {
        const DatasetManifest manifest = load_manifest(manifest_path);
        if (manifest.test.empty()) throw DatasetError("evaluate: manifest has no test tracks");
        references = select_tracks(references, manifest.test);
    }

    std::vector<TrackEstimates> estimates;
    for (const TrackStems& ref : references) {
        TrackEstimates te;
        te.track = ref.name;
        for (const std::string& source : ref.source_names) {
            const std::filesystem::path path =
                std::filesystem::path(estimates_dir) / ref.name / (source + ".wav");
            std::error_code ec;
            if (!std::filesystem::is_regular_file(path, ec))
                throw DatasetError("evaluate: missing estimate " + path.string());
            WavData wav = read_wav(path);
            te.estimates.names.push_back(source);
            te.estimates.waveforms.push_back(std::move(wav.samples));
        }
        estimates.push_back(std::move(te));
    }

    const EvalReport report =
        evaluate_dataset(estimates, references, filter_length, threads, label);
    save_report_json(output_base + ".json", report);
    save_report_csv(output_base + ".csv", {report});
    for (const NamedMetrics& m : report.medians)
        std::printf("%s: median SDR %.4f dB, SIR %.4f dB, SAR %.4f dB\n", m.source.c_str(),
                    m.metrics.sdr, m.metrics.sir, m.metrics.sar);
    std::printf("report written to %s.json / %s.csv\n", output_base.c_str(), output_base.c_str());
    return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& output_csv) {
    std::vector<EvalReport> reports;
    for (const std::string& path : inputs) reports.push_back(load_report_json(path));
    save_report_csv(output_csv, reports);
    std::printf("wrote %s (%zu rows)\n", output_csv.c_str(), reports.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavesep: waveform-domain music source separation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.footer(wavesep::RunConfig::describe_keys());

    int threads = wavesep::default_thread_count();
    app.add_option("--threads", threads, "cap on worker threads (default: available cores)");

    InspectOptions inspect_opt;
    CLI::App* inspect = app.add_subcommand(
        "inspect", "print parameter counts and receptive/target fields for a configuration");
    inspect->add_option("--config", inspect_opt.config_path, "run configuration file");
    inspect->add_flag("--table1", inspect_opt.table1,
                      "print all five reference architectures (N=1..5)");
    inspect->add_flag("--json", inspect_opt.as_json, "emit JSON instead of a table");
    CLI::Option* stacks_opt = inspect->add_option("--stacks", inspect_opt.stacks, "override stacks N");
    CLI::Option* filters_opt =
        inspect->add_option("--filters", inspect_opt.filters, "override filters k");

    std::string mix_root;
    int mix_rate = 16000;
    CLI::App* mix = app.add_subcommand("mix", "synthesize mixture.wav from stems for every track");
    mix->add_option("--dataset", mix_root, "dataset root directory")->required();
    mix->add_option("--rate", mix_rate, "expected sample rate (default 16000)");

    std::string train_config;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model from a configuration file");
    train_cmd->add_option("--config", train_config, "run configuration file")->required();

    std::string sep_checkpoint, sep_input, sep_output;
    CLI::App* separate = app.add_subcommand("separate", "separate a mixture WAV into sources");
    separate->add_option("--checkpoint", sep_checkpoint, "trained checkpoint")->required();
    separate->add_option("--input", sep_input, "mixture WAV (16 kHz mono)")->required();
    separate->add_option("--output", sep_output, "output directory for per-source WAVs")
        ->required();

    std::string eval_estimates, eval_references, eval_manifest, eval_label, eval_output;
    int eval_filter_length = 512;
    int eval_rate = 16000;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score estimates against reference stems");
    evaluate->add_option("--estimates", eval_estimates, "directory of <track>/<source>.wav")
        ->required();
    evaluate->add_option("--references", eval_references, "dataset root with reference stems")
        ->required();
    evaluate->add_option("--manifest", eval_manifest, "restrict to the manifest's test tracks");
    evaluate->add_option("--filter-length", eval_filter_length,
                         "projection filter length in taps (default 512)");
    evaluate->add_option("--label", eval_label, "row label for the CSV report");
    evaluate->add_option("--output", eval_output, "output base path (.json/.csv appended)")
        ->required();
    evaluate->add_option("--rate", eval_rate, "expected sample rate (default 16000)");

    std::vector<std::string> report_inputs;
    std::string report_output;
    CLI::App* report = app.add_subcommand("report", "merge JSON reports into one comparison CSV");
    report->add_option("--output", report_output, "output CSV path")->required();
    report->add_option("inputs", report_inputs, "JSON reports to merge")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wavesep::kExitConfig;
    }

    inspect_opt.stacks_set = stacks_opt->count() > 0;
    inspect_opt.filters_set = filters_opt->count() > 0;

    try {
        if (*inspect) return run_inspect(inspect_opt);
        if (*mix) return run_mix(mix_root, mix_rate);
        if (*train_cmd) return run_train(train_config);
        if (*separate) return run_separate(sep_checkpoint, sep_input, sep_output, threads);
        if (*evaluate)
            return run_evaluate(eval_estimates, eval_references, eval_manifest, eval_filter_length,
                                eval_label, eval_output, threads, eval_rate);
        if (*report) return run_report(report_inputs, report_output);
    } catch (const wavesep::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
