#ifndef WAVESEP_BSS_EVAL_HPP
#define WAVESEP_BSS_EVAL_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wavesep/dataset.hpp"
#include "wavesep/model.hpp"

namespace wavesep {

// Orthogonal split of an estimate into what was wanted, what leaked in
// from the other sources, and what belongs to neither. Projections live on
// the zero-padded domain of length n + filter_length - 1, so for
// filter_length 1 the parts have the estimate's own length. By
// construction s_target + e_interf + e_artif reproduces the (zero-padded)
// estimate.
struct Decomposition {
    std::vector<double> s_target;
    std::vector<double> e_interf;
    std::vector<double> e_artif;
};

// Least-squares projections onto delayed-reference subspaces:
//   s_target   = projection onto span{ref_j delayed by 0..L-1}
//   P_all      = projection onto the span of ALL references' delays
//   e_interf   = P_all(estimate) - s_target
//   e_artif    = estimate - P_all(estimate)
// Gram systems are solved in double precision with 1e-10 added to the
// diagonal; a system that stays singular beyond that is reported as
// degenerate references.
Decomposition decompose(std::span<const double> estimate,
                        const std::vector<std::span<const double>>& references, int target_index,
                        int filter_length);

Decomposition decompose(std::span<const float> estimate,
                        const std::vector<std::span<const float>>& references, int target_index,
                        int filter_length);

struct Metrics {
    double sdr = 0.0;
    double sir = 0.0;
    double sar = 0.0;
};

// Energy ratios in dB, clamped to [-100, +100]; a zero numerator clamps to
// -100 before a zero denominator clamps to +100.
Metrics sdr_sir_sar(const Decomposition& d);

struct NamedMetrics {
    std::string source;
    Metrics metrics;
};

struct TrackReport {
    std::string track;
    std::vector<NamedMetrics> sources;
};

struct EvalReport {
    std::string label;
    int filter_length = 512;
    std::vector<TrackReport> tracks;
    std::vector<NamedMetrics> medians; // per source, median across tracks
};

struct TrackEstimates {
    std::string track;
    SourceEstimates estimates;
};

// Scores every reference source of every track and aggregates dataset-level
// medians (even track counts average the middle two values). Track order
// follows the references; every listed track needs a matching estimate.
EvalReport evaluate_dataset(const std::vector<TrackEstimates>& estimates,
                            const std::vector<TrackStems>& references, int filter_length,
                            int threads = 1, const std::string& label = "");

double median(std::vector<double> values);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
void save_report_json(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report_json(const std::filesystem::path& path);

// One row per report, columns source x {SDR, SIR, SAR}, mirroring the
// usual results-table layout.
std::string reports_to_csv(const std::vector<EvalReport>& reports);
void save_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);

} // namespace wavesep

#endif
