#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "appnet/cross_feature.hpp"
#include "appnet/features.hpp"
#include "appnet/profiles.hpp"

namespace appnet {

enum class GroundTruth { same_version, different_version, malware };

std::string_view to_token(GroundTruth truth);

struct TraceSource {
    std::string profile;
    std::string perturbation;  // empty: unperturbed
    std::uint64_t seed = 0;
    std::int64_t duration_secs = 0;
};

/// One train/test pairing. With `split_test`, train and test are the first and
/// second halves of the train trace; otherwise the test comes from its own trace.
struct DatasetSpec {
    std::string name;
    std::string group;  // row group in the rendered table
    GroundTruth truth = GroundTruth::same_version;
    // false: a version update with no network-relevant change; reported but
    // left out of the confusion counts.
    bool network_change = true;
    TraceSource train;
    bool split_test = false;
    TraceSource test;
};

struct PipelineSettings {
    std::int64_t period_secs = 5;
    std::int64_t window_secs = 60;
    std::size_t train_cap = 150;
    std::size_t test_cap = 400;
    double calibration_fraction = 0.2;
};

struct Manifest {
    std::string name;
    std::vector<DatasetSpec> datasets;
    std::vector<BaseLearner> learners{BaseLearner::decision_table, BaseLearner::reptree};
    std::vector<std::string> subsets{"1", "2"};
    std::vector<double> acceptance_rates{0.05, 0.10, 0.15, 0.20, 0.25};
    PipelineSettings settings;
    ProfileLibrary library;
};

/// YAML manifest; see data/calibration.yaml. `profiles_file` entries resolve
/// relative to the manifest. Throws DataError with line numbers.
Manifest load_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
Manifest load_manifest_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset construction

std::vector<AggregatedVector> vectors_for(const TraceSource& source, const ProfileLibrary& library,
                                          const PipelineSettings& settings);

struct PreparedDataset {
    std::vector<AggregatedVector> train;  // after the train cap
    std::vector<AggregatedVector> test;   // after the test cap
    std::size_t train_available = 0;      // before the cap
    std::size_t test_available = 0;
};

PreparedDataset prepare_dataset(const DatasetSpec& spec, const ProfileLibrary& library,
                                const PipelineSettings& settings);

/// The last `fraction` of the vectors (at least one) is held out for threshold
/// calibration. The fit part keeps at least the 10 vectors training needs, so
/// very small sets overlap the held-out slice.
struct CalibrationSplit {
    std::vector<AggregatedVector> fit;
    std::vector<AggregatedVector> holdout;
};
CalibrationSplit split_for_calibration(std::span<const AggregatedVector> train, double fraction);

/// Train, then calibrate against the held-out slice and its displaced copies.
CrossFeatureModel train_calibrated_model(std::span<const AggregatedVector> train, const FeatureSchema& schema,
                                         BaseLearner learner, double calibration_fraction = 0.2,
                                         const CrossFeatureOptions& options = {});

/// Fraction of `test` classified anomalous.
double detected_fraction(const CrossFeatureModel& model, std::span<const AggregatedVector> test);

// ---------------------------------------------------------------------------
// Evaluation

struct ConfigKey {
    BaseLearner learner = BaseLearner::decision_table;
    std::string subset;
    bool operator==(const ConfigKey&) const = default;
};

std::string config_label(const ConfigKey& key);

struct DatasetResult {
    std::string name;
    std::string group;
    GroundTruth truth = GroundTruth::same_version;
    bool network_change = true;
    std::size_t train_count = 0, train_available = 0;
    std::size_t test_count = 0, test_available = 0;
    std::vector<double> detected;  // per configuration, manifest order
};

struct ConfusionCounts {
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    std::size_t total() const { return tp + fn + fp + tn; }
};

struct ConfigMetrics {
    ConfigKey config;
    double acceptance_rate = 0.0;
    ConfusionCounts counts;
    std::optional<double> tpr;       // absent when no positives
    std::optional<double> fpr;       // absent when no negatives
    std::optional<double> accuracy;  // absent when nothing was counted
};

/// TPR/FPR/accuracy from dataset-level confusion counts; undefined ratios are absent.
ConfigMetrics metrics_from_counts(const ConfigKey& config, double rate, const ConfusionCounts& counts);

struct EvalReport {
    std::string manifest_name;
    std::vector<ConfigKey> configs;
    std::vector<DatasetResult> datasets;
    std::vector<ConfigMetrics> metrics;  // configs x rates, manifest order
    std::optional<std::size_t> chosen;   // index into metrics
    PipelineSettings settings;
};

/// Dataset-level positive: a malware test, or a version update that changes network behaviour.
bool is_positive(GroundTruth truth);

/// Confusion counts of one configuration at one acceptance rate; datasets
/// flagged without a network change are skipped.
ConfusionCounts confusion_for(const EvalReport& report, std::size_t config_index, double rate);

EvalReport run_evaluation(const Manifest& manifest);

void write_report_csv(std::ostream& datasets_csv, std::ostream& metrics_csv, const EvalReport& report);
/// Text table with the row layout of the detection-rate tables, plus a metrics summary.
void render_report_table(std::ostream& out, const EvalReport& report);

// ---------------------------------------------------------------------------
// Training-size curve

/// {10, 20, ..., 100} then {125, 150, ..., 400}, limited to `available`.
std::vector<std::size_t> training_size_grid(std::size_t available);

struct CurvePoint {
    std::size_t train_size = 0;
    double detected_percentage = 0.0;
};

std::vector<CurvePoint> training_size_curve(const DatasetSpec& dataset, BaseLearner learner,
                                            const std::string& subset, const ProfileLibrary& library,
                                            const PipelineSettings& settings = {});

// ---------------------------------------------------------------------------
// Timing

struct TimingResult {
    double train_ms_per_model = 0.0;     // median over repetitions
    double test_ms_per_instance = 0.0;   // median over repetitions
    double noop_ms = 0.0;                // harness overhead floor
    std::size_t repetitions = 0;
};

struct BenchmarkConfig {
    BaseLearner learner = BaseLearner::reptree;
    std::string subset = "2";
    std::size_t n_train = 50;
    std::size_t n_apps = 10;
    std::size_t repetitions = 10;
    std::uint64_t seed = 2024;
};

TimingResult benchmark_timing(const BenchmarkConfig& config);

}  // namespace appnet
