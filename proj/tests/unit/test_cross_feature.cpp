#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "appnet/cross_feature.hpp"
#include "appnet/error.hpp"

using namespace appnet;

namespace {

AggregatedVector vec(std::initializer_list<std::pair<Feature, double>> values) {
    AggregatedVector v;
    v.app_id = "a";
    for (auto [f, x] : values) v[f] = x;
    return v;
}

std::vector<AggregatedVector> constant_set(std::size_t n) {
    std::vector<AggregatedVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto v = vec({{Feature::avg_sent_bytes, 400}, {Feature::avg_recv_bytes, 900}, {Feature::pct_recv_bytes, 69},
                      {Feature::global_inner_send_interval, 6}, {Feature::global_inner_recv_interval, 4},
                      {Feature::global_outer_send_interval, 80}, {Feature::global_outer_recv_interval, 70}});
        v.window_end_ts = 60 * std::int64_t(i + 1);
        out.push_back(v);
    }
    return out;
}

// Brute-force Youden sweep: best J, then highest threshold among the ties.
ThresholdChoice sweep(const std::vector<double>& normal, const std::vector<double>& anomalous) {
    std::vector<double> all(normal);
    all.insert(all.end(), anomalous.begin(), anomalous.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<double> cands;
    for (std::size_t i = 0; i + 1 < all.size(); ++i) cands.push_back((all[i] + all[i + 1]) / 2);
    if (cands.empty()) cands.push_back(all[0]);
    ThresholdChoice best;
    double best_j = -2;
    for (double t : cands) {
        double tp = 0, fp = 0;
        for (double x : anomalous) tp += x < t;
        for (double x : normal) fp += x < t;
        const double tpr = tp / double(anomalous.size()), fpr = fp / double(normal.size());
        if (tpr - fpr > best_j + 1e-12 || (std::abs(tpr - fpr - best_j) <= 1e-12 && t > best.threshold_logp)) {
            best_j = tpr - fpr;
            best = {t, tpr, fpr};
        }
    }
    return best;
}

}  // namespace

TEST_CASE("one predictor per active feature") {
    const auto set = constant_set(20);
    const auto m = train_cross_feature(set, schema_for_subset("1"), BaseLearner::decision_table);
    CHECK(m.predictors.size() == 7);
    CHECK(m.feature_means.size() == 7);
    CHECK_FALSE(m.calibrated());
    const auto m2 = train_cross_feature(set, schema_for_subset("2"), BaseLearner::reptree);
    CHECK(m2.predictors.size() == 9);
}

TEST_CASE("constant training data scores zero distance") {
    const auto set = constant_set(20);
    for (auto learner : {BaseLearner::decision_table, BaseLearner::reptree}) {
        const auto m = train_cross_feature(set, schema_for_subset("1"), learner);
        for (const auto& v : set) {
            for (double d : feature_distances(m, v)) CHECK(d == 0.0);
            CHECK(normality_log_probability(m, v) == 0.0);
        }
    }
}

TEST_CASE("planted sum dependency is learned") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> d(0, 4);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    std::vector<AggregatedVector> set;
    for (int i = 0; i < 150; ++i) {
        const double f1 = 100.0 * d(rng), f2 = 10.0 * d(rng);
        set.push_back(vec({{Feature::avg_sent_bytes, f1}, {Feature::avg_recv_bytes, f2},
                           {Feature::pct_recv_bytes, f1 + f2}, {Feature::max_sent_bytes, u(rng)}}));
    }
    const FeatureSchema schema{"planted", {Feature::avg_sent_bytes, Feature::avg_recv_bytes, Feature::pct_recv_bytes,
                                           Feature::max_sent_bytes}};
    for (auto learner : {BaseLearner::reptree, BaseLearner::decision_table}) {
        const auto m = train_cross_feature(set, schema, learner);
        double mse = 0, mean = 0, var = 0;
        for (const auto& v : set) mean += v[Feature::max_sent_bytes];
        mean /= double(set.size());
        for (const auto& v : set) {
            const std::vector<double> row{v[Feature::avg_sent_bytes], v[Feature::avg_recv_bytes],
                                          v[Feature::pct_recv_bytes], v[Feature::max_sent_bytes]};
            const double e = predict(m.predictors[2], row) - v[Feature::pct_recv_bytes];
            mse += e * e;
            var += (v[Feature::max_sent_bytes] - mean) * (v[Feature::max_sent_bytes] - mean);
        }
        mse /= double(set.size());
        var /= double(set.size());
        INFO("learner " << to_token(learner));
        CHECK(mse < 0.01 * var);
    }
}

TEST_CASE("distance examples") {
    CHECK(feature_distance(100, 100, FeatureKind::numeric, 100) == 0.0);
    CHECK(feature_distance(120, 100, FeatureKind::numeric, 100) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(feature_distance(300, 100, FeatureKind::numeric, 100) == kDistanceCap);
    CHECK(feature_distance(5, 5, FeatureKind::numeric, 0) == 0.0);
    CHECK(feature_distance(5, 6, FeatureKind::numeric, 0) == kDistanceCap);
    CHECK(feature_distance(-1, 3, FeatureKind::numeric, -0.5) == kDistanceCap);
    CHECK(feature_distance(2, 2, FeatureKind::categorical, 0) == 0.0);
    CHECK(feature_distance(1, 2, FeatureKind::categorical, 0) == kDistanceCap);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1000.0, 1000.0);
    for (int i = 0; i < 10000; ++i) {
        const double p = u(rng), a = u(rng), m = u(rng);
        const double d = feature_distance(p, a, FeatureKind::numeric, m);
        CHECK((d >= 0.0 && d <= kDistanceCap));
        CHECK(feature_distance(a, a, FeatureKind::numeric, m) == 0.0);
    }
}

TEST_CASE("log probability sums") {
    const std::vector<double> zeros(7, 0.0);
    CHECK(log_probability_from_distances(zeros) == 0.0);
    const std::vector<double> two{0.2, 0.5, 0, 0, 0, 0, 0};
    CHECK(std::abs(log_probability_from_distances(two) - (std::log(0.8) + std::log(0.5))) < 1e-12);
    const std::vector<double> capped{kDistanceCap};
    CHECK(std::abs(log_probability_from_distances(capped) - std::log(0.001)) < 1e-12);
    // order does not matter, and a larger distance always lowers the score
    const std::vector<double> a{0.1, 0.7, 0.3}, b{0.3, 0.1, 0.7}, c{0.1, 0.8, 0.3};
    CHECK(log_probability_from_distances(a) == doctest::Approx(log_probability_from_distances(b)).epsilon(1e-14));
    CHECK(log_probability_from_distances(c) < log_probability_from_distances(a));
}

TEST_CASE("threshold choice") {
    SUBCASE("separable") {
        const std::vector<double> n{-1, -2}, a{-10, -12};
        const auto c = choose_threshold(n, a);
        CHECK(c.threshold_logp < -2);
        CHECK(c.threshold_logp > -10);
        CHECK(c.youden_j() == 1.0);
    }
    SUBCASE("identical distributions keep the highest candidate") {
        const std::vector<double> n{-1, -2, -3}, a{-1, -2, -3};
        const auto c = choose_threshold(n, a);
        CHECK(c.youden_j() == 0.0);
        CHECK(c.threshold_logp == -1.5);
    }
    SUBCASE("matches an exhaustive sweep") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 300; ++trial) {
            std::uniform_int_distribution<int> size(1, 30);
            std::normal_distribution<double> normal(-2.0, 2.0), anomalous(-6.0, 3.0);
            std::vector<double> ns(size(rng)), as(size(rng));
            // coarse rounding makes ties common
            for (auto& x : ns) x = std::round(normal(rng) * 2) / 2;
            for (auto& x : as) x = std::round(anomalous(rng) * 2) / 2;
            const auto got = choose_threshold(ns, as);
            const auto want = sweep(ns, as);
            CHECK(got.threshold_logp == want.threshold_logp);
            CHECK(got.tpr == doctest::Approx(want.tpr));
            CHECK(got.fpr == doctest::Approx(want.fpr));
        }
    }
    CHECK_THROWS_AS(choose_threshold({}, std::vector<double>{-1}), std::invalid_argument);
    CHECK_THROWS_AS(choose_threshold(std::vector<double>{-1}, {}), std::invalid_argument);
}

TEST_CASE("classification of memorised and displaced vectors") {
    const auto set = constant_set(20);
    auto m = train_cross_feature(set, schema_for_subset("1"), BaseLearner::decision_table);
    CHECK_THROWS_AS(classify_instance(m, set[0]), std::logic_error);

    auto displaced = set[0];
    for (std::size_t i = 0; i < m.schema.size(); ++i)
        displaced[m.schema.active[i]] += 2.0 * m.feature_means[i];
    const std::vector<AggregatedVector> normal(set.begin(), set.end()), anomalous{displaced};
    m.threshold_logp = calibrate_threshold(m, normal, anomalous).threshold_logp;
    CHECK(*m.threshold_logp <= 0.0);

    const auto ok = classify_instance(m, set[3]);
    CHECK_FALSE(ok.is_anomalous);
    CHECK(ok.log_probability == 0.0);
    const auto bad = classify_instance(m, displaced);
    CHECK(bad.is_anomalous);
    for (double d : bad.per_feature_distances) CHECK(d == kDistanceCap);
    CHECK(bad.log_probability == doctest::Approx(7 * std::log(0.001)));
    CHECK(classify_instance(m, displaced) == bad);
}

TEST_CASE("displaced calibration vectors") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(10.0, 500.0);
    std::vector<AggregatedVector> set;
    for (int i = 0; i < 40; ++i)
        set.push_back(vec({{Feature::avg_sent_bytes, u(rng)}, {Feature::avg_recv_bytes, u(rng)},
                           {Feature::pct_recv_bytes, u(rng) / 5}, {Feature::global_inner_send_interval, u(rng) / 20},
                           {Feature::global_inner_recv_interval, -1}, {Feature::global_outer_send_interval, u(rng)},
                           {Feature::global_outer_recv_interval, u(rng)}}));
    const auto m = train_cross_feature(set, schema_for_subset("1"), BaseLearner::reptree);
    const std::span<const AggregatedVector> base(set.data(), 5);

    const auto full = displaced_vectors(m, set, base);
    REQUIRE(full.size() == 5);
    for (const auto& v : full) {
        CHECK(v.label == Label::anomalous);
        for (double d : feature_distances(m, v)) CHECK(d == kDistanceCap);
    }

    const auto graded = graded_displaced_vectors(m, set, base);
    CHECK(graded.size() == 5 * (7 - kMinDisplacedFeatures + 1));
    for (std::size_t i = 0; i < graded.size(); ++i) {
        const auto& orig = base[i / 5];
        std::size_t moved = 0;
        for (Feature f : m.schema.active) moved += graded[i][f] != orig[f];
        CHECK(moved == kMinDisplacedFeatures + i % 5);
    }
}

TEST_CASE("model file round trip") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    std::vector<AggregatedVector> set;
    for (int i = 0; i < 60; ++i) {
        const double s = u(rng);
        set.push_back(vec({{Feature::avg_sent_bytes, s}, {Feature::avg_recv_bytes, 3 * s + u(rng) / 10},
                           {Feature::pct_recv_bytes, 75}, {Feature::global_inner_send_interval, u(rng) / 50},
                           {Feature::global_inner_recv_interval, 5}, {Feature::global_outer_send_interval, -1},
                           {Feature::global_outer_recv_interval, u(rng)}, {Feature::avg_sent_pct, u(rng) / 5},
                           {Feature::avg_recv_pct, 50}}));
    }
    for (auto learner : {BaseLearner::decision_table, BaseLearner::reptree}) {
        auto m = train_cross_feature(set, schema_for_subset("2"), learner);
        m.threshold_logp = -12.25;
        std::stringstream ss;
        write_cross_feature_model(ss, m);
        const auto back = read_cross_feature_model(ss);
        CHECK(back.schema.id == "2");
        CHECK(back.schema.active == m.schema.active);
        CHECK(back.base_learner == learner);
        CHECK(back.feature_means == m.feature_means);
        CHECK(back.threshold_logp == m.threshold_logp);
        for (const auto& v : set) CHECK(classify_instance(back, v) == classify_instance(m, v));
    }
    std::stringstream bad("cross_feature_model 9\n");
    CHECK_THROWS_AS(read_cross_feature_model(bad), DataError);
}

TEST_CASE("training input checks") {
    CHECK_THROWS_AS(train_cross_feature(constant_set(9), schema_for_subset("1"), BaseLearner::reptree),
                    std::invalid_argument);
    const FeatureSchema one{"x", {Feature::avg_sent_bytes}};
    CHECK_THROWS_AS(train_cross_feature(constant_set(20), one, BaseLearner::reptree), std::invalid_argument);
    CHECK(parse_base_learner("reptree") == BaseLearner::reptree);
    CHECK_THROWS_AS(parse_base_learner("svm"), std::invalid_argument);
}
