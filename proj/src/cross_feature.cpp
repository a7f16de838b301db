#include "appnet/cross_feature.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "text_io.hpp"

namespace appnet {

std::string_view to_token(BaseLearner learner) {
    return learner == BaseLearner::decision_table ? "decision_table" : "reptree";
}

BaseLearner parse_base_learner(std::string_view token) {
    if (token == "decision_table") return BaseLearner::decision_table;
    if (token == "reptree") return BaseLearner::reptree;
    throw std::invalid_argument("unknown base learner '" + std::string(token) +
                                "' (valid: decision_table, reptree)");
}

namespace {

std::vector<double> active_row(const FeatureSchema& schema, const AggregatedVector& v) {
    std::vector<double> row;
    row.reserve(schema.size());
    for (Feature f : schema.active) row.push_back(v[f]);
    return row;
}

std::vector<ColumnInfo> schema_columns(const FeatureSchema& schema) {
    std::vector<ColumnInfo> cols;
    for (Feature f : schema.active) {
        const auto& info = feature_info(f);
        ColumnInfo c{std::string(info.name), info.kind, {}};
        for (auto t : info.categories) c.categories.emplace_back(t);
        cols.push_back(std::move(c));
    }
    return cols;
}

}  // namespace

CrossFeatureModel train_cross_feature(std::span<const AggregatedVector> vectors, const FeatureSchema& schema,
                                      BaseLearner base_learner, const CrossFeatureOptions& options) {
    validate_schema(schema);
    if (schema.size() < 2) throw std::invalid_argument("cross-feature analysis needs at least two active features");
    if (vectors.empty()) throw std::invalid_argument("empty training set");
    if (vectors.size() < 10)
        throw std::invalid_argument("cross-feature training needs at least 10 vectors, got " +
                                    std::to_string(vectors.size()));
    const auto used = vectors.first(std::min(vectors.size(), options.max_training_instances));

    TrainingMatrix matrix;
    matrix.columns = schema_columns(schema);
    for (const auto& v : used) matrix.add_row(active_row(schema, v));

    CrossFeatureModel model;
    model.schema = schema;
    model.base_learner = base_learner;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        matrix.target = i;
        if (matrix.columns[i].kind == FeatureKind::categorical) {
            model.predictors.emplace_back(train_classification_tree(matrix, options.tree));
            model.feature_means.push_back(0.0);
            continue;
        }
        if (base_learner == BaseLearner::decision_table)
            model.predictors.emplace_back(train_decision_table(matrix, options.table));
        else
            model.predictors.emplace_back(train_regression_tree(matrix, options.tree));
        double sum = 0.0;
        for (std::size_t r = 0; r < matrix.rows(); ++r) sum += matrix.at(r, i);
        model.feature_means.push_back(sum / static_cast<double>(matrix.rows()));
    }
    return model;
}

double feature_distance(double predicted, double actual, FeatureKind kind, double training_mean) {
    if (kind == FeatureKind::categorical) return predicted == actual ? 0.0 : kDistanceCap;
    const double diff = std::abs(predicted - actual);
    const double scale = std::abs(training_mean);
    if (diff == 0.0) return 0.0;
    if (scale == 0.0 || diff > scale) return kDistanceCap;
    return std::min(diff / scale, kDistanceCap);
}

std::vector<double> feature_distances(const CrossFeatureModel& model, const AggregatedVector& vector) {
    if (model.predictors.size() != model.schema.size() || model.feature_means.size() != model.schema.size())
        throw std::invalid_argument("cross-feature model does not match its schema");
    const auto row = active_row(model.schema, vector);
    std::vector<double> distances;
    distances.reserve(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        const double predicted = predict(model.predictors[i], row);
        distances.push_back(feature_distance(predicted, row[i], feature_info(model.schema.active[i]).kind,
                                             model.feature_means[i]));
    }
    return distances;
}

double log_probability_from_distances(std::span<const double> distances) {
    double sum = 0.0;
    for (double d : distances) sum += std::log(std::max(1.0 - d, kProbabilityFloor));
    return sum;
}

double normality_log_probability(const CrossFeatureModel& model, const AggregatedVector& vector) {
    return log_probability_from_distances(feature_distances(model, vector));
}

ThresholdChoice choose_threshold(std::span<const double> normal_scores, std::span<const double> anomalous_scores) {
    if (normal_scores.empty() || anomalous_scores.empty())
        throw std::invalid_argument("threshold calibration needs normal and anomalous examples");

    std::vector<double> pooled(normal_scores.begin(), normal_scores.end());
    pooled.insert(pooled.end(), anomalous_scores.begin(), anomalous_scores.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    std::vector<double> candidates;
    for (std::size_t i = 1; i < pooled.size(); ++i) candidates.push_back(pooled[i - 1] + (pooled[i] - pooled[i - 1]) / 2);
    if (candidates.empty()) candidates.push_back(pooled.front());

    const auto nn = static_cast<long long>(normal_scores.size());
    const auto na = static_cast<long long>(anomalous_scores.size());
    auto below = [](std::span<const double> xs, double t) {
        return static_cast<long long>(std::count_if(xs.begin(), xs.end(), [t](double x) { return x < t; }));
    };

    ThresholdChoice best;
    long long best_tp = 0, best_fp = 0;
    bool have = false;
    for (double t : candidates) {
        const long long tp = below(anomalous_scores, t);
        const long long fp = below(normal_scores, t);
        // Compare J = tp/na - fp/nn exactly in integers; >= keeps the higher threshold on ties.
        if (!have || (tp * nn - fp * na) >= (best_tp * nn - best_fp * na)) {
            have = true;
            best_tp = tp;
            best_fp = fp;
            best.threshold_logp = t;
        }
    }
    best.tpr = static_cast<double>(best_tp) / static_cast<double>(na);
    best.fpr = static_cast<double>(best_fp) / static_cast<double>(nn);
    return best;
}

ThresholdChoice calibrate_threshold(const CrossFeatureModel& model, std::span<const AggregatedVector> normal,
                                    std::span<const AggregatedVector> anomalous) {
    if (normal.empty() || anomalous.empty())
        throw std::invalid_argument("threshold calibration needs normal and anomalous examples");
    std::vector<double> ns, as;
    for (const auto& v : normal) ns.push_back(normality_log_probability(model, v));
    for (const auto& v : anomalous) as.push_back(normality_log_probability(model, v));
    return choose_threshold(ns, as);
}

Verdict classify_instance(const CrossFeatureModel& model, const AggregatedVector& vector) {
    if (!model.calibrated()) throw std::logic_error("cross-feature model has no calibrated threshold");
    Verdict v;
    v.window_end_ts = vector.window_end_ts;
    v.app_id = vector.app_id;
    v.per_feature_distances = feature_distances(model, vector);
    v.log_probability = log_probability_from_distances(v.per_feature_distances);
    v.is_anomalous = v.log_probability < *model.threshold_logp;
    return v;
}

namespace {

struct Displacement {
    Feature feature;
    double shift;
};

// Shift that puts a feature past the top of its training range by twice its mean.
std::vector<Displacement> displacements(const CrossFeatureModel& model, std::span<const AggregatedVector> training) {
    if (training.empty()) throw std::invalid_argument("displacement needs the training vectors");
    std::vector<Displacement> out;
    for (std::size_t i = 0; i < model.schema.size(); ++i) {
        const Feature f = model.schema.active[i];
        if (feature_info(f).kind != FeatureKind::numeric) continue;
        double lo = training.front()[f], hi = lo;
        for (const auto& v : training) {
            lo = std::min(lo, v[f]);
            hi = std::max(hi, v[f]);
        }
        out.push_back({f, (hi - lo) + 2.0 * std::abs(model.feature_means[i]) + 1.0});
    }
    return out;
}

}  // namespace

std::vector<AggregatedVector> displaced_vectors(const CrossFeatureModel& model,
                                                std::span<const AggregatedVector> training,
                                                std::span<const AggregatedVector> base) {
    const auto shifts = displacements(model, training);
    std::vector<AggregatedVector> out(base.begin(), base.end());
    for (auto& v : out) {
        for (const auto& d : shifts) v[d.feature] += d.shift;
        v.label = Label::anomalous;
    }
    return out;
}

std::vector<AggregatedVector> graded_displaced_vectors(const CrossFeatureModel& model,
                                                       std::span<const AggregatedVector> training,
                                                       std::span<const AggregatedVector> base,
                                                       std::size_t min_displaced) {
    const auto shifts = displacements(model, training);
    const std::size_t n = shifts.size();
    std::vector<AggregatedVector> out;
    if (n == 0) return out;
    const std::size_t k_min = std::clamp<std::size_t>(min_displaced, 1, n);
    out.reserve(base.size() * (n - k_min + 1));
    for (std::size_t r = 0; r < base.size(); ++r) {
        for (std::size_t k = k_min; k <= n; ++k) {
            AggregatedVector v = base[r];
            for (std::size_t j = 0; j < k; ++j) {
                const auto& d = shifts[(r + j) % n];
                v[d.feature] += d.shift;
            }
            v.label = Label::anomalous;
            out.push_back(std::move(v));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

void write_cross_feature_model(std::ostream& out, const CrossFeatureModel& model) {
    out << "cross_feature_model " << kCrossFeatureFormatVersion << '\n';
    out << "subset " << model.schema.id << '\n';
    out << "learner " << to_token(model.base_learner) << '\n';
    out << "features " << model.schema.size();
    for (Feature f : model.schema.active) out << ' ' << feature_info(f).name;
    out << '\n';
    out << "means " << model.feature_means.size();
    for (double m : model.feature_means) out << ' ' << detail::format_double(m);
    out << '\n';
    out << "threshold " << (model.threshold_logp ? detail::format_double(*model.threshold_logp) : "none") << '\n';
    for (std::size_t i = 0; i < model.predictors.size(); ++i) {
        out << "predictor " << i << '\n';
        write_model(out, model.predictors[i]);
    }
    out << "end_cross_feature_model\n";
}

CrossFeatureModel read_cross_feature_model(std::istream& in) {
    std::size_t line = 0;
    detail::LineReader r(in, line);
    auto header = r.expect("cross_feature_model", 1);
    if (detail::parse_int(header[1], line) != kCrossFeatureFormatVersion)
        r.fail("unsupported cross-feature model version " + header[1]);

    CrossFeatureModel model;
    model.schema.id = r.expect("subset", 1)[1];
    try {
        model.base_learner = parse_base_learner(r.expect("learner", 1)[1]);
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
    auto features = r.expect("features");
    const std::size_t n = detail::parse_index(features.at(1), line);
    if (features.size() != n + 2) r.fail("feature count does not match listed features");
    for (std::size_t i = 0; i < n; ++i) {
        auto f = parse_feature(features[2 + i]);
        if (!f) r.fail("unknown feature '" + features[2 + i] + "'");
        model.schema.active.push_back(*f);
    }
    try {
        validate_schema(model.schema);
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
    auto means = r.expect("means", static_cast<int>(n) + 1);
    if (detail::parse_index(means[1], line) != n) r.fail("mean count does not match features");
    for (std::size_t i = 0; i < n; ++i) model.feature_means.push_back(detail::parse_double(means[2 + i], line));
    const auto threshold = r.expect("threshold", 1)[1];
    if (threshold != "none") {
        model.threshold_logp = detail::parse_double(threshold, line);
        if (*model.threshold_logp > 0.0) r.fail("threshold must be <= 0");
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto t = r.expect("predictor", 1);
        if (detail::parse_index(t[1], line) != i) r.fail("predictors out of order");
        model.predictors.push_back(read_model(in, line));
        const std::size_t arity = std::visit([](const auto& m) { return m.arity; }, model.predictors.back());
        if (arity != n) r.fail("predictor arity does not match the schema");
    }
    r.expect("end_cross_feature_model", 0);
    return model;
}

}  // namespace appnet
