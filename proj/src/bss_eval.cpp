#include "wavesep/bss_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wavesep/parallel.hpp"

namespace wavesep {

namespace {

constexpr double kGramRegularization = 1e-10;
constexpr double kDbClamp = 100.0;

// sum_u a[u] * b[u + d] over the overlap of both supports.
double lagged_dot(std::span<const double> a, std::span<const double> b, int d) {
    const int n = static_cast<int>(a.size());
    const int lo = std::max(0, -d);
    const int hi = std::min(n, static_cast<int>(b.size()) - d);
    double acc = 0.0;
    for (int u = lo; u < hi; ++u) acc += a[u] * b[u + d];
    return acc;
}

// In-place Cholesky solve of (A + reg*I) x = rhs for symmetric positive
// semi-definite A stored densely row-major.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> rhs, size_t dim) {
    for (size_t i = 0; i < dim; ++i) a[i * dim + i] += kGramRegularization;
    // factor A = L L^T
    for (size_t j = 0; j < dim; ++j) {
        double diag = a[j * dim + j];
        for (size_t k = 0; k < j; ++k) diag -= a[j * dim + k] * a[j * dim + k];
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw DatasetError("bss_eval: degenerate references (Gram matrix is singular "
                               "beyond regularization)");
        const double root = std::sqrt(diag);
        a[j * dim + j] = root;
        for (size_t i = j + 1; i < dim; ++i) {
            double v = a[i * dim + j];
            for (size_t k = 0; k < j; ++k) v -= a[i * dim + k] * a[j * dim + k];
            a[i * dim + j] = v / root;
        }
    }
    // forward then backward substitution
    for (size_t i = 0; i < dim; ++i) {
        double v = rhs[i];
        for (size_t k = 0; k < i; ++k) v -= a[i * dim + k] * rhs[k];
        rhs[i] = v / a[i * dim + i];
    }
    for (size_t ii = dim; ii-- > 0;) {
        double v = rhs[ii];
        for (size_t k = ii + 1; k < dim; ++k) v -= a[k * dim + ii] * rhs[k];
        rhs[ii] = v / a[ii * dim + ii];
    }
    return rhs;
}

// Least-squares projection of the (zero-extended) estimate onto the span of
// 0..L-1 sample delays of the given references, returned on the padded
// domain of length n + L - 1.
std::vector<double> project_onto_delays(std::span<const double> estimate,
                                        const std::vector<std::span<const double>>& refs, int L) {
    const int n = static_cast<int>(estimate.size());
    const int refs_count = static_cast<int>(refs.size());
    const size_t dim = static_cast<size_t>(refs_count) * L;

    // Correlations c[i][i'][d] for d in (-L, L); the Gram matrix is built
    // from them because delayed references never truncate on the padded
    // domain.
    std::vector<double> corr(static_cast<size_t>(refs_count) * refs_count * (2 * L - 1));
    const auto corr_at = [&](int i, int ip, int d) -> double& {
        return corr[(static_cast<size_t>(i) * refs_count + ip) * (2 * L - 1) + (d + L - 1)];
    };
    for (int i = 0; i < refs_count; ++i)
        for (int ip = 0; ip < refs_count; ++ip)
            for (int d = -(L - 1); d <= L - 1; ++d)
                corr_at(i, ip, d) = lagged_dot(refs[i], refs[ip], d);

    std::vector<double> gram(dim * dim);
    for (int i = 0; i < refs_count; ++i)
        for (int tau = 0; tau < L; ++tau)
            for (int ip = 0; ip < refs_count; ++ip)
                for (int taup = 0; taup < L; ++taup)
                    gram[(static_cast<size_t>(i) * L + tau) * dim + static_cast<size_t>(ip) * L + taup] =
                        corr_at(i, ip, tau - taup);

    std::vector<double> rhs(dim);
    for (int i = 0; i < refs_count; ++i)
        for (int tau = 0; tau < L; ++tau)
            rhs[static_cast<size_t>(i) * L + tau] = lagged_dot(refs[i], estimate, tau);

    const std::vector<double> coef = solve_spd(std::move(gram), std::move(rhs), dim);

    std::vector<double> projection(static_cast<size_t>(n) + L - 1, 0.0);
    for (int i = 0; i < refs_count; ++i)
        for (int tau = 0; tau < L; ++tau) {
            const double c = coef[static_cast<size_t>(i) * L + tau];
            if (c == 0.0) continue;
            const std::span<const double> r = refs[i];
            for (int t = 0; t < n; ++t) projection[static_cast<size_t>(t) + tau] += c * r[t];
        }
    return projection;
}

double energy(std::span<const double> x) {
    double acc = 0.0;
    for (const double v : x) acc += v * v;
    return acc;
}

double db_ratio(double num, double den) {
    if (num == 0.0) return -kDbClamp;
    if (den == 0.0) return kDbClamp;
    return std::clamp(10.0 * std::log10(num / den), -kDbClamp, kDbClamp);
}

nlohmann::json metrics_to_json(const Metrics& m) {
    return nlohmann::json{{"sdr", m.sdr}, {"sir", m.sir}, {"sar", m.sar}};
}

Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    j.at("sdr").get_to(m.sdr);
    j.at("sir").get_to(m.sir);
    j.at("sar").get_to(m.sar);
    return m;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text,
                       const char* what) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw IntegrityError(std::string(what) + ": cannot open " + tmp.string());
        f << text;
        if (!f) throw IntegrityError(std::string(what) + ": write failed on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IntegrityError(std::string(what) + ": cannot move " + tmp.string() + " to " +
                             path.string() + ": " + ec.message());
}

} // namespace

Decomposition decompose(std::span<const double> estimate,
                        const std::vector<std::span<const double>>& references, int target_index,
                        int filter_length) {
    if (filter_length < 1) throw ConfigError("decompose: filter_length must be >= 1");
    if (references.empty()) throw ConfigError("decompose: no references");
    if (target_index < 0 || target_index >= static_cast<int>(references.size()))
        throw ConfigError("decompose: target index out of range");
    for (const auto& r : references)
        if (r.size() != estimate.size())
            throw ConfigError("decompose: reference/estimate length mismatch");
    if (estimate.empty()) throw ConfigError("decompose: empty signals");
    for (const double v : estimate)
        if (!std::isfinite(v)) throw ConfigError("decompose: non-finite estimate");
    for (const auto& r : references)
        for (const double v : r)
            if (!std::isfinite(v)) throw ConfigError("decompose: non-finite reference");

    const int L = filter_length;
    Decomposition d;
    d.s_target = project_onto_delays(estimate, {references[target_index]}, L);
    const std::vector<double> p_all = project_onto_delays(estimate, references, L);

    const size_t padded = estimate.size() + L - 1;
    d.e_interf.resize(padded);
    d.e_artif.resize(padded);
    for (size_t t = 0; t < padded; ++t) {
        d.e_interf[t] = p_all[t] - d.s_target[t];
        const double e0 = t < estimate.size() ? estimate[t] : 0.0;
        d.e_artif[t] = e0 - p_all[t];
    }
    return d;
}

Decomposition decompose(std::span<const float> estimate,
                        const std::vector<std::span<const float>>& references, int target_index,
                        int filter_length) {
    std::vector<double> est(estimate.begin(), estimate.end());
    std::vector<std::vector<double>> refs_data;
    refs_data.reserve(references.size());
    for (const auto& r : references) refs_data.emplace_back(r.begin(), r.end());
    std::vector<std::span<const double>> refs(refs_data.begin(), refs_data.end());
    return decompose(std::span<const double>(est), refs, target_index, filter_length);
}

Metrics sdr_sir_sar(const Decomposition& d) {
    const double target = energy(d.s_target);
    const double interf = energy(d.e_interf);
    const double artif = energy(d.e_artif);
    std::vector<double> noise(d.e_interf.size());
    for (size_t t = 0; t < noise.size(); ++t) noise[t] = d.e_interf[t] + d.e_artif[t];
    std::vector<double> wanted(d.s_target.size());
    for (size_t t = 0; t < wanted.size(); ++t) wanted[t] = d.s_target[t] + d.e_interf[t];

    Metrics m;
    m.sdr = db_ratio(target, energy(noise));
    m.sir = db_ratio(target, interf);
    m.sar = db_ratio(energy(wanted), artif);
    return m;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median: empty input");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EvalReport evaluate_dataset(const std::vector<TrackEstimates>& estimates,
                            const std::vector<TrackStems>& references, int filter_length,
                            int threads, const std::string& label) {
    if (references.empty()) throw DatasetError("evaluate: no reference tracks");
    EvalReport report;
    report.label = label;
    report.filter_length = filter_length;
    report.tracks.resize(references.size());

    parallel_for(references.size(), threads, [&](size_t idx) {
        const TrackStems& ref = references[idx];
        const auto it = std::find_if(estimates.begin(), estimates.end(),
                                     [&](const TrackEstimates& e) { return e.track == ref.name; });
        if (it == estimates.end())
            throw DatasetError("evaluate: no estimates for track '" + ref.name + "'");

        std::vector<std::vector<double>> ref_data;
        ref_data.reserve(ref.sources.size());
        for (const std::vector<float>& s : ref.sources) ref_data.emplace_back(s.begin(), s.end());
        std::vector<std::span<const double>> refs(ref_data.begin(), ref_data.end());

        TrackReport tr;
        tr.track = ref.name;
        for (size_t j = 0; j < ref.source_names.size(); ++j) {
            const std::vector<float>& est_f = it->estimates.waveform(ref.source_names[j]);
            if (est_f.size() != ref.sources[j].size())
                throw DatasetError("evaluate: track '" + ref.name + "', source '" +
                                   ref.source_names[j] + "': estimate length " +
                                   std::to_string(est_f.size()) + " vs reference " +
                                   std::to_string(ref.sources[j].size()));
            const std::vector<double> est(est_f.begin(), est_f.end());
            const Decomposition d =
                decompose(std::span<const double>(est), refs, static_cast<int>(j), filter_length);
            tr.sources.push_back({ref.source_names[j], sdr_sir_sar(d)});
        }
        report.tracks[idx] = std::move(tr);
    });

    // medians per source, in first track's source order
    for (const NamedMetrics& nm : report.tracks.front().sources) {
        std::vector<double> sdr, sir, sar;
        for (const TrackReport& tr : report.tracks)
            for (const NamedMetrics& m : tr.sources)
                if (m.source == nm.source) {
                    sdr.push_back(m.metrics.sdr);
                    sir.push_back(m.metrics.sir);
                    sar.push_back(m.metrics.sar);
                }
        report.medians.push_back({nm.source, {median(sdr), median(sir), median(sar)}});
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["label"] = report.label;
    j["filter_length"] = report.filter_length;
    nlohmann::json tracks = nlohmann::json::array();
    for (const TrackReport& tr : report.tracks) {
        nlohmann::json sources = nlohmann::json::array();
        for (const NamedMetrics& m : tr.sources) {
            nlohmann::json s = metrics_to_json(m.metrics);
            s["source"] = m.source;
            sources.push_back(s);
        }
        tracks.push_back(nlohmann::json{{"name", tr.track}, {"sources", sources}});
    }
    j["tracks"] = tracks;
    nlohmann::json medians = nlohmann::json::array();
    for (const NamedMetrics& m : report.medians) {
        nlohmann::json s = metrics_to_json(m.metrics);
        s["source"] = m.source;
        medians.push_back(s);
    }
    j["medians"] = medians;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        EvalReport report;
        report.label = j.value("label", "");
        report.filter_length = j.at("filter_length").get<int>();
        for (const nlohmann::json& tj : j.at("tracks")) {
            TrackReport tr;
            tr.track = tj.at("name").get<std::string>();
            for (const nlohmann::json& sj : tj.at("sources"))
                tr.sources.push_back({sj.at("source").get<std::string>(), metrics_from_json(sj)});
            report.tracks.push_back(std::move(tr));
        }
        for (const nlohmann::json& sj : j.at("medians"))
            report.medians.push_back({sj.at("source").get<std::string>(), metrics_from_json(sj)});
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("report JSON: ") + e.what());
    }
}

void save_report_json(const std::filesystem::path& path, const EvalReport& report) {
    write_text_atomic(path, report_to_json(report), "report");
}

EvalReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IntegrityError("report: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return report_from_json(text);
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw ConfigError("report: nothing to tabulate");
    // union of source names, first-seen order
    std::vector<std::string> sources;
    for (const EvalReport& r : reports)
        for (const NamedMetrics& m : r.medians)
            if (std::find(sources.begin(), sources.end(), m.source) == sources.end())
                sources.push_back(m.source);

    std::string csv = "model";
    for (const std::string& s : sources)
        csv += "," + s + "_SDR," + s + "_SIR," + s + "_SAR";
    csv += "\n";
    for (const EvalReport& r : reports) {
        csv += r.label.empty() ? "unnamed" : r.label;
        for (const std::string& s : sources) {
            const auto it = std::find_if(r.medians.begin(), r.medians.end(),
                                         [&](const NamedMetrics& m) { return m.source == s; });
            if (it == r.medians.end()) {
                csv += ",,,";
            } else {
                csv += "," + format_double(it->metrics.sdr) + "," + format_double(it->metrics.sir) +
                       "," + format_double(it->metrics.sar);
            }
        }
        csv += "\n";
    }
    return csv;
}

void save_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
    write_text_atomic(path, reports_to_csv(reports), "report");
}

} // namespace wavesep
