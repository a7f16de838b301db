#include <doctest.h>

#include <random>
#include <sstream>

#include "appnet/evaluation.hpp"

using namespace appnet;

namespace {

const ConfigKey kKey{BaseLearner::decision_table, "1"};

DatasetResult result(GroundTruth truth, double detected, bool network_change = true) {
    DatasetResult r;
    r.name = "d";
    r.truth = truth;
    r.network_change = network_change;
    r.detected = {detected};
    return r;
}

ProfileLibrary metronome_library() {
    ProfileLibrary lib = builtin_library();
    AppProfile p;
    p.app_id = "metronome";
    p.sent_bytes_log_mean = 5;
    p.recv_bytes_log_mean = 5;
    p.periodic_sync_interval_secs = 5;
    p.periodic_sync_bytes = 300;
    lib.profiles["metronome"] = p;
    return lib;
}

}  // namespace

TEST_CASE("metric arithmetic") {
    const auto m = metrics_from_counts(kKey, 0.2, {4, 1, 0, 11});
    CHECK(*m.tpr == doctest::Approx(0.8));
    CHECK(*m.fpr == 0.0);
    CHECK(*m.accuracy == doctest::Approx(15.0 / 16.0));
    const auto perfect = metrics_from_counts(kKey, 0.2, {8, 0, 0, 8});
    CHECK(*perfect.tpr == 1.0);
    CHECK(*perfect.fpr == 0.0);
    CHECK(*perfect.accuracy == 1.0);
    // 14 of 16 datasets right
    CHECK(*metrics_from_counts(kKey, 0.2, {4, 1, 1, 10}).accuracy == doctest::Approx(0.875));
    const auto no_pos = metrics_from_counts(kKey, 0.2, {0, 0, 2, 3});
    CHECK_FALSE(no_pos.tpr);
    CHECK(*no_pos.fpr == doctest::Approx(0.4));
    CHECK_FALSE(metrics_from_counts(kKey, 0.2, {}).accuracy);
}

TEST_CASE("confusion counts match a recount of the decisions") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        EvalReport report;
        report.configs = {kKey};
        const int n = 1 + int(rng() % 20);
        for (int i = 0; i < n; ++i)
            report.datasets.push_back(result(GroundTruth(rng() % 3), std::round(u(rng) * 20) / 20, rng() % 4 != 0));
        for (double rate : {0.05, 0.1, 0.15, 0.2, 0.25}) {
            ConfusionCounts want;
            for (const auto& d : report.datasets) {
                if (d.truth == GroundTruth::different_version && !d.network_change) continue;
                const bool flagged = d.detected[0] > rate;
                const bool positive = d.truth != GroundTruth::same_version;
                (positive ? (flagged ? want.tp : want.fn) : (flagged ? want.fp : want.tn))++;
            }
            const auto got = confusion_for(report, 0, rate);
            CHECK(got.tp == want.tp);
            CHECK(got.fn == want.fn);
            CHECK(got.fp == want.fp);
            CHECK(got.tn == want.tn);
            const auto m = metrics_from_counts(kKey, rate, got);
            if (m.accuracy) CHECK(*m.accuracy == doctest::Approx(double(got.tp + got.tn) / double(got.total())));
        }
    }
}

TEST_CASE("training size grid") {
    std::vector<std::size_t> want;
    for (std::size_t k = 10; k <= 100; k += 10) want.push_back(k);
    for (std::size_t k = 125; k <= 400; k += 25) want.push_back(k);
    CHECK(training_size_grid(400) == want);
    CHECK(training_size_grid(1000) == want);
    CHECK(training_size_grid(95) == std::vector<std::size_t>{10, 20, 30, 40, 50, 60, 70, 80, 90});
    CHECK(training_size_grid(130) == std::vector<std::size_t>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 125});
    CHECK(training_size_grid(9).empty());
}

TEST_CASE("caps are applied and reported") {
    DatasetSpec spec;
    spec.name = "cap";
    spec.truth = GroundTruth::malware;
    spec.train = {"gmail", "", 1, 4 * 3600};
    spec.test = {"gmail", "gmail_trojan", 2, 8 * 3600};
    const auto p = prepare_dataset(spec, builtin_library(), {});
    CHECK(p.train_available == 4 * 60);
    CHECK(p.train.size() == 150);
    CHECK(p.test_available == 8 * 60);
    CHECK(p.test.size() == 400);
    CHECK(p.train.front().label == Label::normal);
    CHECK(p.test.front().label == Label::anomalous);

    spec.split_test = true;
    spec.truth = GroundTruth::same_version;
    const auto s = prepare_dataset(spec, builtin_library(), {});
    CHECK(s.train_available == 120);
    CHECK(s.test_available == 120);
    CHECK(s.train.back().window_end_ts < s.test.front().window_end_ts);
    CHECK(s.test.front().label == Label::normal);
}

TEST_CASE("calibration split") {
    std::vector<AggregatedVector> vs(150);
    for (std::size_t i = 0; i < vs.size(); ++i) vs[i].window_end_ts = std::int64_t(i);
    const auto s = split_for_calibration(vs, 0.2);
    CHECK(s.fit.size() == 120);
    CHECK(s.holdout.size() == 30);
    CHECK(s.holdout.front().window_end_ts == 120);
    const auto small = split_for_calibration(std::span(vs).first(11), 0.2);
    CHECK(small.fit.size() == 10);
    CHECK(small.holdout.size() == 2);
}

TEST_CASE("constant traffic needs only ten training vectors") {
    DatasetSpec spec;
    spec.name = "metronome";
    spec.train = {"metronome", "", 1, 4 * 3600};
    spec.split_test = true;
    const auto curve = training_size_curve(spec, BaseLearner::decision_table, "1", metronome_library());
    REQUIRE_FALSE(curve.empty());
    CHECK(curve.front().train_size == 10);
    CHECK(curve.front().detected_percentage == 0.0);
}

TEST_CASE("small evaluation is deterministic and well formed") {
    Manifest m;
    m.name = "tiny";
    m.library = builtin_library();
    m.learners = {BaseLearner::decision_table};
    m.subsets = {"1"};
    m.acceptance_rates = {0.2};
    DatasetSpec same;
    same.name = "snake_same";
    same.group = "snake";
    same.train = {"snake", "", 3, 4 * 3600};
    same.split_test = true;
    DatasetSpec mal = same;
    mal.name = "snake_trojan";
    mal.truth = GroundTruth::malware;
    mal.split_test = false;
    mal.train.duration_secs = 2 * 3600;
    mal.test = {"snake", "snake_trojan", 4, 3600};
    m.datasets = {same, mal};

    const auto a = run_evaluation(m);
    const auto b = run_evaluation(m);
    std::ostringstream da, ma, db, mb, ta, tb;
    write_report_csv(da, ma, a);
    write_report_csv(db, mb, b);
    render_report_table(ta, a);
    render_report_table(tb, b);
    CHECK(da.str() == db.str());
    CHECK(ma.str() == mb.str());
    CHECK(ta.str() == tb.str());

    REQUIRE(a.metrics.size() == 1);
    REQUIRE(a.chosen);
    const auto& met = a.metrics[0];
    CHECK(met.counts.total() == 2);
    CHECK(a.datasets[1].detected[0] > a.datasets[0].detected[0]);
    CHECK(da.str().rfind("dataset,group,truth,network_change,train_count,train_available,test_count,test_available,"
                         "detected_pct:decision_table/1\n",
                         0) == 0);
    CHECK(ta.str().find("snake_trojan") != std::string::npos);
}

TEST_CASE("timing harness runs") {
    BenchmarkConfig c;
    c.repetitions = 3;
    c.n_apps = 2;
    const auto r = benchmark_timing(c);
    CHECK(r.repetitions == 3);
    CHECK(r.train_ms_per_model > 0.0);
    CHECK(r.test_ms_per_instance > 0.0);
    CHECK(r.noop_ms >= 0.0);
    CHECK(r.noop_ms < r.test_ms_per_instance);
}
