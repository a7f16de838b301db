#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "appnet/features.hpp"
#include "appnet/learners.hpp"

namespace appnet {

enum class BaseLearner { decision_table, reptree };

std::string_view to_token(BaseLearner learner);
/// Throws std::invalid_argument listing the valid ids.
BaseLearner parse_base_learner(std::string_view token);

inline constexpr double kDistanceCap = 0.999;
inline constexpr double kProbabilityFloor = 0.001;

struct CrossFeatureOptions {
    std::size_t max_training_instances = 150;
    TreeParams tree;
    DecisionTableParams table;
};

/// One predictor per active feature, trained to infer that feature from the
/// other active features.
struct CrossFeatureModel {
    FeatureSchema schema;
    BaseLearner base_learner = BaseLearner::decision_table;
    std::vector<Model> predictors;     // schema order
    std::vector<double> feature_means; // schema order; 0 for categorical features
    std::optional<double> threshold_logp;

    bool calibrated() const { return threshold_logp.has_value(); }
};

struct Verdict {
    std::int64_t window_end_ts = 0;
    std::string app_id;
    double log_probability = 0.0;
    bool is_anomalous = false;
    std::vector<double> per_feature_distances;  // schema order

    bool operator==(const Verdict&) const = default;
};

CrossFeatureModel train_cross_feature(std::span<const AggregatedVector> vectors, const FeatureSchema& schema,
                                      BaseLearner base_learner, const CrossFeatureOptions& options = {});

/// Numeric: |predicted - actual| / |mean|, capped at kDistanceCap once the
/// difference exceeds |mean|. Categorical: 0 on match, kDistanceCap otherwise.
double feature_distance(double predicted, double actual, FeatureKind kind, double training_mean);

/// Distances of every active feature, schema order.
std::vector<double> feature_distances(const CrossFeatureModel& model, const AggregatedVector& vector);

/// Sum over active features of log(max(1 - distance, kProbabilityFloor)).
double log_probability_from_distances(std::span<const double> distances);

double normality_log_probability(const CrossFeatureModel& model, const AggregatedVector& vector);

struct ThresholdChoice {
    double threshold_logp = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double youden_j() const { return tpr - fpr; }
};

/// Midpoint between consecutive distinct pooled scores maximising TPR - FPR
/// (anomalous means score < threshold); ties go to the higher threshold.
ThresholdChoice choose_threshold(std::span<const double> normal_scores, std::span<const double> anomalous_scores);

ThresholdChoice calibrate_threshold(const CrossFeatureModel& model, std::span<const AggregatedVector> normal,
                                    std::span<const AggregatedVector> anomalous);

/// Throws std::logic_error when the model is not calibrated.
Verdict classify_instance(const CrossFeatureModel& model, const AggregatedVector& vector);

/// Anomalous calibration vectors: every numeric active feature of each input
/// shifted past the top of its training range by twice the training mean.
std::vector<AggregatedVector> displaced_vectors(const CrossFeatureModel& model,
                                                std::span<const AggregatedVector> training,
                                                std::span<const AggregatedVector> base);

/// Calibration anomalies: for every base vector, one copy per k in
/// [min_displaced, n] with k of the n numeric features displaced as above,
/// starting at a feature that rotates with the vector's position.
inline constexpr std::size_t kMinDisplacedFeatures = 3;
std::vector<AggregatedVector> graded_displaced_vectors(const CrossFeatureModel& model,
                                                       std::span<const AggregatedVector> training,
                                                       std::span<const AggregatedVector> base,
                                                       std::size_t min_displaced = kMinDisplacedFeatures);

inline constexpr int kCrossFeatureFormatVersion = 1;
void write_cross_feature_model(std::ostream& out, const CrossFeatureModel& model);
/// Throws DataError with line numbers on malformed input.
CrossFeatureModel read_cross_feature_model(std::istream& in);

}  // namespace appnet
