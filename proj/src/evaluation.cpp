#include "appnet/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "appnet/detection.hpp"
#include "appnet/simulator.hpp"

namespace appnet {

std::string_view to_token(GroundTruth truth) {
    switch (truth) {
    case GroundTruth::same_version: return "same_version";
    case GroundTruth::different_version: return "different_version";
    case GroundTruth::malware: return "malware";
    }
    return "?";
}

bool is_positive(GroundTruth truth) { return truth != GroundTruth::same_version; }

std::string config_label(const ConfigKey& key) { return fmt::format("{}/{}", to_token(key.learner), key.subset); }

// ---------------------------------------------------------------------------
// Datasets

std::vector<AggregatedVector> vectors_for(const TraceSource& source, const ProfileLibrary& library,
                                          const PipelineSettings& settings) {
    AppProfile profile = library.profile(source.profile);
    if (!source.perturbation.empty()) profile = perturb_profile(profile, library.perturbation(source.perturbation));
    const auto events = simulate_trace(profile, source.duration_secs, source.seed);

    ExtractionOptions extraction;
    extraction.period_secs = settings.period_secs;
    extraction.days_since_modified = profile.days_since_modified;
    const auto samples = extract_samples(events, extraction);

    AggregationOptions aggregation;
    aggregation.period_secs = settings.period_secs;
    aggregation.window_secs = settings.window_secs;
    return aggregate_samples(samples, aggregation);
}

namespace {

std::vector<AggregatedVector> take(std::vector<AggregatedVector> v, std::size_t cap) {
    if (v.size() > cap) v.resize(cap);
    return v;
}

void label_all(std::vector<AggregatedVector>& vs, Label label) {
    for (auto& v : vs) v.label = label;
}

}  // namespace

PreparedDataset prepare_dataset(const DatasetSpec& spec, const ProfileLibrary& library,
                                const PipelineSettings& settings) {
    auto train = vectors_for(spec.train, library, settings);
    std::vector<AggregatedVector> test;
    if (spec.split_test) {
        const std::size_t half = train.size() / 2;
        test.assign(train.begin() + static_cast<std::ptrdiff_t>(half), train.end());
        train.resize(half);
    } else {
        test = vectors_for(spec.test, library, settings);
    }
    label_all(train, Label::normal);
    label_all(test, spec.truth == GroundTruth::same_version ? Label::normal : Label::anomalous);

    PreparedDataset out;
    out.train_available = train.size();
    out.test_available = test.size();
    out.train = take(std::move(train), settings.train_cap);
    out.test = take(std::move(test), settings.test_cap);
    return out;
}

CalibrationSplit split_for_calibration(std::span<const AggregatedVector> train, double fraction) {
    const std::size_t n = train.size();
    if (n < 2) throw std::invalid_argument("calibration split needs at least 2 vectors");
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("calibration fraction must lie in (0, 1)");
    auto hold = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
    hold = std::clamp<std::size_t>(hold, 1, n - 1);
    const std::size_t fit = std::max(n - hold, std::min<std::size_t>(10, n));
    CalibrationSplit split;
    split.fit.assign(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(fit));
    split.holdout.assign(train.end() - static_cast<std::ptrdiff_t>(hold), train.end());
    return split;
}

CrossFeatureModel train_calibrated_model(std::span<const AggregatedVector> train, const FeatureSchema& schema,
                                         BaseLearner learner, double calibration_fraction,
                                         const CrossFeatureOptions& options) {
    const auto split = split_for_calibration(train, calibration_fraction);
    auto model = train_cross_feature(split.fit, schema, learner, options);
    const auto anomalous = graded_displaced_vectors(model, split.fit, split.holdout);
    model.threshold_logp = calibrate_threshold(model, split.holdout, anomalous).threshold_logp;
    return model;
}

double detected_fraction(const CrossFeatureModel& model, std::span<const AggregatedVector> test) {
    if (test.empty()) throw std::invalid_argument("empty test set");
    std::size_t anomalous = 0;
    for (const auto& v : test)
        if (classify_instance(model, v).is_anomalous) ++anomalous;
    return static_cast<double>(anomalous) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------
// Evaluation

ConfigMetrics metrics_from_counts(const ConfigKey& config, double rate, const ConfusionCounts& c) {
    ConfigMetrics m;
    m.config = config;
    m.acceptance_rate = rate;
    m.counts = c;
    if (c.tp + c.fn > 0) m.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.fp + c.tn > 0) m.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    if (c.total() > 0) m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return m;
}

ConfusionCounts confusion_for(const EvalReport& report, std::size_t config_index, double rate) {
    ConfusionCounts c;
    for (const auto& d : report.datasets) {
        if (d.truth == GroundTruth::different_version && !d.network_change) continue;
        const bool flagged = d.detected.at(config_index) > rate;
        if (is_positive(d.truth))
            ++(flagged ? c.tp : c.fn);
        else
            ++(flagged ? c.fp : c.tn);
    }
    return c;
}

EvalReport run_evaluation(const Manifest& manifest) {
    if (manifest.datasets.empty()) throw std::invalid_argument("manifest lists no datasets");
    EvalReport report;
    report.manifest_name = manifest.name;
    report.settings = manifest.settings;
    for (auto learner : manifest.learners)
        for (const auto& subset : manifest.subsets) report.configs.push_back({learner, subset});

    for (const auto& spec : manifest.datasets) {
        const auto prepared = prepare_dataset(spec, manifest.library, manifest.settings);
        DatasetResult result;
        result.name = spec.name;
        result.group = spec.group;
        result.truth = spec.truth;
        result.network_change = spec.network_change;
        result.train_count = prepared.train.size();
        result.train_available = prepared.train_available;
        result.test_count = prepared.test.size();
        result.test_available = prepared.test_available;
        for (const auto& config : report.configs) {
            const auto model = train_calibrated_model(prepared.train, schema_for_subset(config.subset), config.learner,
                                                      manifest.settings.calibration_fraction);
            result.detected.push_back(detected_fraction(model, prepared.test));
        }
        report.datasets.push_back(std::move(result));
    }

    for (std::size_t c = 0; c < report.configs.size(); ++c)
        for (double rate : manifest.acceptance_rates)
            report.metrics.push_back(metrics_from_counts(report.configs[c], rate, confusion_for(report, c, rate)));

    // Best accuracy; ties prefer higher TPR, then lower FPR, then manifest order.
    for (std::size_t i = 0; i < report.metrics.size(); ++i) {
        const auto& m = report.metrics[i];
        if (!m.accuracy) continue;
        if (!report.chosen) {
            report.chosen = i;
            continue;
        }
        const auto& b = report.metrics[*report.chosen];
        const double tpr = m.tpr.value_or(0.0), btpr = b.tpr.value_or(0.0);
        const double fpr = m.fpr.value_or(0.0), bfpr = b.fpr.value_or(0.0);
        if (*m.accuracy > *b.accuracy || (*m.accuracy == *b.accuracy && (tpr > btpr || (tpr == btpr && fpr < bfpr))))
            report.chosen = i;
    }
    return report;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string(); }

std::string pct(double fraction) { return fmt::format("{:.1f}", 100.0 * fraction); }

}  // namespace

void write_report_csv(std::ostream& datasets_csv, std::ostream& metrics_csv, const EvalReport& report) {
    datasets_csv << "dataset,group,truth,network_change,train_count,train_available,test_count,test_available";
    for (const auto& c : report.configs) datasets_csv << ",detected_pct:" << config_label(c);
    datasets_csv << '\n';
    for (const auto& d : report.datasets) {
        datasets_csv << d.name << ',' << d.group << ',' << to_token(d.truth) << ',' << (d.network_change ? 1 : 0) << ','
                     << d.train_count << ',' << d.train_available << ',' << d.test_count << ',' << d.test_available;
        for (double f : d.detected) datasets_csv << ',' << fmt::format("{:.2f}", 100.0 * f);
        datasets_csv << '\n';
    }

    metrics_csv << "learner,subset,acceptance_rate,tp,fn,fp,tn,tpr,fpr,accuracy,chosen\n";
    for (std::size_t i = 0; i < report.metrics.size(); ++i) {
        const auto& m = report.metrics[i];
        metrics_csv << to_token(m.config.learner) << ',' << m.config.subset << ','
                    << fmt::format("{:.2f}", m.acceptance_rate) << ',' << m.counts.tp << ',' << m.counts.fn << ','
                    << m.counts.fp << ',' << m.counts.tn << ',' << opt(m.tpr) << ',' << opt(m.fpr) << ','
                    << opt(m.accuracy) << ',' << (report.chosen == i ? 1 : 0) << '\n';
    }
}

void render_report_table(std::ostream& out, const EvalReport& report) {
    const std::size_t name_width = 40;
    const std::size_t col_width = 20;

    // Per column, the acceptance rate with the best accuracy; used to mark errors.
    std::vector<std::optional<double>> column_rate(report.configs.size());
    for (std::size_t c = 0; c < report.configs.size(); ++c) {
        std::optional<double> best_acc;
        for (const auto& m : report.metrics) {
            if (!(m.config == report.configs[c]) || !m.accuracy) continue;
            if (!best_acc || *m.accuracy > *best_acc) {
                best_acc = m.accuracy;
                column_rate[c] = m.acceptance_rate;
            }
        }
    }

    out << fmt::format("Detection rate on {} datasets\n", report.manifest_name);
    out << fmt::format("{:<{}}{}\n", "Application Name", name_width, "Detected anomalous records (%)");
    out << fmt::format("{:<{}}", "", name_width);
    for (const auto& c : report.configs) out << fmt::format("{:<{}}", config_label(c), col_width);
    out << '\n';

    std::vector<std::string> groups;
    for (const auto& d : report.datasets)
        if (std::find(groups.begin(), groups.end(), d.group) == groups.end()) groups.push_back(d.group);
    for (const auto& g : groups) {
        out << g << '\n';
        for (const auto& d : report.datasets) {
            if (d.group != g) continue;
            std::string name = "  " + d.name;
            if (d.truth == GroundTruth::different_version && !d.network_change) name += " (no network change)";
            out << fmt::format("{:<{}}", name, name_width);
            for (std::size_t c = 0; c < report.configs.size(); ++c) {
                std::string cell = pct(d.detected[c]);
                const bool counted = !(d.truth == GroundTruth::different_version && !d.network_change);
                if (counted && column_rate[c] && (d.detected[c] > *column_rate[c]) != is_positive(d.truth))
                    cell = "*" + cell;
                out << fmt::format("{:<{}}", cell, col_width);
            }
            out << '\n';
        }
    }
    out << "(* marks a dataset-level error at the column's best acceptance rate)\n\n";

    out << fmt::format("{:<22}{:>10}{:>6}{:>6}{:>6}{:>6}{:>9}{:>9}{:>10}\n", "configuration", "accept", "TP", "FN",
                       "FP", "TN", "TPR", "FPR", "accuracy");
    auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("n/a"); };
    for (std::size_t i = 0; i < report.metrics.size(); ++i) {
        const auto& m = report.metrics[i];
        out << fmt::format("{:<22}{:>10.2f}{:>6}{:>6}{:>6}{:>6}{:>9}{:>9}{:>10}{}\n", config_label(m.config),
                           m.acceptance_rate, m.counts.tp, m.counts.fn, m.counts.fp, m.counts.tn, show(m.tpr),
                           show(m.fpr), show(m.accuracy), report.chosen == i ? "  <- chosen" : "");
    }
    out << fmt::format("\ntrain cap {} / test cap {} vectors; period {} s, window {} s\n", report.settings.train_cap,
                       report.settings.test_cap, report.settings.period_secs, report.settings.window_secs);
}

// ---------------------------------------------------------------------------
// Training-size curve

std::vector<std::size_t> training_size_grid(std::size_t available) {
    std::vector<std::size_t> grid;
    for (std::size_t k = 10; k <= 100; k += 10)
        if (k <= available) grid.push_back(k);
    for (std::size_t k = 125; k <= 400; k += 25)
        if (k <= available) grid.push_back(k);
    return grid;
}

std::vector<CurvePoint> training_size_curve(const DatasetSpec& dataset, BaseLearner learner,
                                            const std::string& subset, const ProfileLibrary& library,
                                            const PipelineSettings& settings) {
    PipelineSettings uncapped = settings;
    uncapped.train_cap = std::numeric_limits<std::size_t>::max();
    const auto prepared = prepare_dataset(dataset, library, uncapped);
    if (prepared.train.size() < 10) throw std::invalid_argument("training-size curve needs at least 10 train vectors");
    const auto schema = schema_for_subset(subset);
    CrossFeatureOptions options;
    options.max_training_instances = std::numeric_limits<std::size_t>::max();

    std::vector<CurvePoint> curve;
    for (std::size_t k : training_size_grid(prepared.train.size())) {
        const auto model = train_calibrated_model(std::span(prepared.train).first(k), schema, learner,
                                                  settings.calibration_fraction, options);
        curve.push_back({k, 100.0 * detected_fraction(model, prepared.test)});
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Timing

namespace {

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

template <class F>
double elapsed_ms(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TimingResult benchmark_timing(const BenchmarkConfig& config) {
    if (config.repetitions == 0 || config.n_apps == 0) throw std::invalid_argument("benchmark needs work to time");
    const auto& names = builtin_profile_names();
    const std::size_t apps = std::min(config.n_apps, names.size());
    const auto schema = schema_for_subset(config.subset);
    const std::size_t test_per_app = 20;

    PipelineSettings settings;
    std::vector<std::vector<AggregatedVector>> train(apps), test(apps);
    for (std::size_t a = 0; a < apps; ++a) {
        const auto windows = static_cast<std::int64_t>(config.n_train + test_per_app + 1);
        auto vs = vectors_for({names[a], "", config.seed + a, windows * settings.window_secs}, builtin_library(),
                              settings);
        if (vs.size() < config.n_train + test_per_app) throw std::logic_error("benchmark workload too short");
        train[a].assign(vs.begin(), vs.begin() + static_cast<std::ptrdiff_t>(config.n_train));
        test[a].assign(vs.begin() + static_cast<std::ptrdiff_t>(config.n_train),
                       vs.begin() + static_cast<std::ptrdiff_t>(config.n_train + test_per_app));
    }

    std::vector<CrossFeatureModel> models(apps);
    std::vector<double> train_ms, test_ms, noop_ms;
    std::size_t sink = 0;
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        const double t = elapsed_ms([&] {
            for (std::size_t a = 0; a < apps; ++a) {
                models[a] = train_cross_feature(train[a], schema, config.learner);
                models[a].threshold_logp = -1.0;
            }
        });
        train_ms.push_back(t / static_cast<double>(apps));

        const double c = elapsed_ms([&] {
            for (std::size_t a = 0; a < apps; ++a)
                for (const auto& v : test[a]) sink += classify_instance(models[a], v).is_anomalous ? 1 : 0;
        });
        test_ms.push_back(c / static_cast<double>(apps * test_per_app));

        noop_ms.push_back(elapsed_ms([&] { sink += rep; }));
    }

    TimingResult r;
    r.train_ms_per_model = median(train_ms);
    r.test_ms_per_instance = median(test_ms);
    r.noop_ms = median(noop_ms) + static_cast<double>(sink % 2) * 0.0;
    r.repetitions = config.repetitions;
    return r;
}

}  // namespace appnet
