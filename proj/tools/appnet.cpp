// appnet: simulate, aggregate, train, detect, evaluate, bench.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "appnet/detection.hpp"
#include "appnet/error.hpp"
#include "appnet/evaluation.hpp"
#include "appnet/io.hpp"
#include "appnet/profiles.hpp"
#include "appnet/simulator.hpp"

namespace fs = std::filesystem;
using namespace appnet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Thrown for bad flag values that CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::uint64_t seed = 1;
    std::int64_t period = 5;
    std::int64_t window = 60;
    std::string subset = "1";
    std::string learner = "decision_table";
    double acceptance = 0.20;
    std::string manifest;
    std::string model;
    std::string out;
    std::string in;
    std::string alarms;
    std::string profile;
    std::string perturb;
    std::string profiles;
    std::int64_t duration = 3600;
    double days = 0.0;
    std::size_t train_cap = 150;
    double calibration_fraction = 0.2;
    std::string samples;
    std::size_t repetitions = 10;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

BaseLearner learner_of(const Options& o) {
    try {
        return parse_base_learner(o.learner);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

FeatureSchema schema_of(const Options& o) {
    const auto& known = known_subset_ids();
    if (std::find(known.begin(), known.end(), o.subset) == known.end()) {
        std::string list;
        for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
        throw UsageError("unknown feature subset '" + o.subset + "' (valid: " + list + ")");
    }
    return schema_for_subset(o.subset);
}

void check_timing(const Options& o) {
    if (o.period <= 0 || o.window <= 0 || o.window % o.period != 0)
        throw UsageError("--window must be a positive multiple of --period");
}

ProfileLibrary library_of(const Options& o) {
    return o.profiles.empty() ? builtin_library() : load_library_file(o.profiles);
}

// Writes to the file, or to stdout when the path is empty or "-".
template <class F>
void with_output(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    auto out = open_out(path);
    write(out);
}

int run_simulate(const Options& o) {
    const auto lib = library_of(o);
    AppProfile profile;
    try {
        profile = lib.profile(o.profile);
        if (!o.perturb.empty()) profile = perturb_profile(profile, lib.perturbation(o.perturb));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (o.duration < 1) throw UsageError("--duration must be >= 1");
    const auto events = simulate_trace(profile, o.duration, o.seed);
    with_output(o.out, [&](std::ostream& out) { write_trace(out, events); });
    return 0;
}

int run_aggregate(const Options& o) {
    check_timing(o);
    auto in = open_in(o.in);
    const auto events = read_trace(in);
    ExtractionOptions extraction;
    extraction.period_secs = o.period;
    extraction.days_since_modified = o.days;
    const auto samples = extract_samples(events, extraction);
    if (!o.samples.empty()) {
        auto out = open_out(o.samples);
        write_samples_csv(out, samples);
    }
    AggregationOptions aggregation;
    aggregation.period_secs = o.period;
    aggregation.window_secs = o.window;
    const auto vectors = aggregate_samples(samples, aggregation);
    with_output(o.out, [&](std::ostream& out) { write_vectors_csv(out, vectors); });
    return 0;
}

int run_train(const Options& o) {
    const auto schema = schema_of(o);
    const auto learner = learner_of(o);
    if (!(o.calibration_fraction > 0.0 && o.calibration_fraction < 1.0))
        throw UsageError("--calibration-fraction must lie in (0, 1)");
    auto in = open_in(o.in);
    auto vectors = read_vectors_csv(in);
    if (vectors.size() > o.train_cap) vectors.resize(o.train_cap);
    if (vectors.size() < 10) throw DataError(fmt::format("need at least 10 vectors to train, got {}", vectors.size()));
    const auto model = train_calibrated_model(vectors, schema, learner, o.calibration_fraction);
    with_output(o.out, [&](std::ostream& out) { write_cross_feature_model(out, model); });
    std::cerr << fmt::format("trained {} on {} vectors, subset {}, threshold {:.4f}\n", to_token(learner),
                             vectors.size(), schema.id, *model.threshold_logp);
    return 0;
}

int run_detect(const Options& o) {
    if (!(o.acceptance >= 0.0 && o.acceptance < 1.0)) throw UsageError("--acceptance must lie in [0, 1)");
    auto model_in = open_in(o.model);
    const auto model = read_cross_feature_model(model_in);
    if (!model.calibrated()) throw DataError("model " + o.model + " has no threshold");
    auto in = open_in(o.in);
    const auto vectors = read_vectors_csv(in);

    std::optional<std::ofstream> alarm_file;
    if (!o.alarms.empty()) alarm_file = open_out(o.alarms);

    std::size_t anomalous = 0, alarms = 0;
    std::map<std::string, AlarmState> states;
    with_output(o.out, [&](std::ostream& out) {
        write_verdict_header(out);
        for (const auto& v : vectors) {
            const auto verdict = classify_instance(model, v);
            write_verdict_line(out, verdict);
            if (verdict.is_anomalous) ++anomalous;
            if (auto alarm = update_alarm(states[v.app_id], verdict)) {
                ++alarms;
                if (alarm_file) write_alarm_line(*alarm_file, *alarm);
            }
        }
    });
    if (vectors.empty()) {
        std::cerr << "no vectors to classify\n";
        return 0;
    }
    const auto decision = dataset_decision(anomalous, vectors.size(), o.acceptance);
    std::cerr << fmt::format("{} of {} vectors anomalous ({:.1f}%), {} alarm(s); acceptance {:.2f}: {}\n", anomalous,
                             vectors.size(), 100.0 * decision.detected_anomalous_fraction, alarms, o.acceptance,
                             decision.is_meaningful_deviation ? "meaningful deviation" : "within normal behaviour");
    return 0;
}

int run_evaluate(const Options& o) {
    auto manifest = load_manifest_file(o.manifest);
    const auto report = run_evaluation(manifest);
    if (o.out.empty()) {
        render_report_table(std::cout, report);
        return 0;
    }
    fs::create_directories(o.out);
    auto datasets = open_out((fs::path(o.out) / "datasets.csv").string());
    auto metrics = open_out((fs::path(o.out) / "metrics.csv").string());
    write_report_csv(datasets, metrics, report);
    auto table = open_out((fs::path(o.out) / "report.txt").string());
    render_report_table(table, report);
    render_report_table(std::cout, report);
    return 0;
}

int run_bench(const Options& o) {
    BenchmarkConfig config;
    config.learner = learner_of(o);
    config.subset = schema_of(o).id;
    config.seed = o.seed;
    config.repetitions = o.repetitions;
    const auto r = benchmark_timing(config);
    with_output(o.out, [&](std::ostream& out) {
        out << fmt::format("{:<28}{:>12}\n", "measure", "ms");
        out << fmt::format("{:<28}{:>12.3f}\n", "train (50 vectors)", r.train_ms_per_model);
        out << fmt::format("{:<28}{:>12.4f}\n", "test (per instance)", r.test_ms_per_instance);
        out << fmt::format("{:<28}{:>12.6f}\n", "no-op floor", r.noop_ms);
        out << fmt::format("learner {}, subset {}, {} apps, median of {} repetitions\n", to_token(config.learner),
                           config.subset, config.n_apps, r.repetitions);
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-app network behaviour anomaly detection with cross-feature analysis"};
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "Simulate an app's network event trace");
    sim->add_option("--profile", o.profile, "Profile name")->required();
    sim->add_option("--perturb", o.perturb, "Perturbation name (version update or beacon)");
    sim->add_option("--profiles", o.profiles, "YAML file with extra profiles/perturbations");
    sim->add_option("--duration", o.duration, "Trace length in seconds")->capture_default_str();
    sim->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sim->add_option("--out", o.out, "Trace file (default stdout)");

    auto* agg = app.add_subcommand("aggregate", "Extract samples and aggregate them into feature vectors");
    agg->add_option("--in", o.in, "Trace file")->required();
    agg->add_option("--out", o.out, "Vector CSV (default stdout)");
    agg->add_option("--period", o.period, "Extraction period in seconds")->capture_default_str();
    agg->add_option("--window", o.window, "Aggregation window in seconds")->capture_default_str();
    agg->add_option("--days-since-modified", o.days, "Value of the days-since-modified feature");
    agg->add_option("--samples", o.samples, "Also write the per-period samples here");

    auto* train = app.add_subcommand("train", "Train and calibrate a cross-feature model");
    train->add_option("--in", o.in, "Vector CSV")->required();
    train->add_option("--out", o.out, "Model file (default stdout)");
    train->add_option("--subset", o.subset, "Feature subset: 1, 2 or full")->capture_default_str();
    train->add_option("--learner", o.learner, "decision_table or reptree")->capture_default_str();
    train->add_option("--train-cap", o.train_cap, "Use at most this many vectors")->capture_default_str();
    train->add_option("--calibration-fraction", o.calibration_fraction, "Share held out for the threshold")
        ->capture_default_str();

    auto* detect = app.add_subcommand("detect", "Classify vectors and raise alarms");
    detect->add_option("--model", o.model, "Model file")->required();
    detect->add_option("--in", o.in, "Vector CSV")->required();
    detect->add_option("--out", o.out, "Verdict stream (default stdout)");
    detect->add_option("--alarms", o.alarms, "Alarm log");
    detect->add_option("--acceptance", o.acceptance, "Anomaly acceptance rate")->capture_default_str();

    auto* eval = app.add_subcommand("evaluate", "Run the dataset sweep in a manifest");
    eval->add_option("--manifest", o.manifest, "Manifest YAML")->required();
    eval->add_option("--out", o.out, "Directory for datasets.csv, metrics.csv and report.txt");

    auto* bench = app.add_subcommand("bench", "Time model training and per-instance testing");
    bench->add_option("--learner", o.learner, "decision_table or reptree");
    bench->add_option("--subset", o.subset, "Feature subset");
    bench->add_option("--seed", o.seed, "Workload seed");
    bench->add_option("--repetitions", o.repetitions, "Repetitions")->capture_default_str();
    bench->add_option("--out", o.out, "Timing table (default stdout)");
    bench->preparse_callback([&](std::size_t) {
        o.learner = "reptree";
        o.subset = "2";
        o.seed = 2024;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*sim) return run_simulate(o);
        if (*agg) return run_aggregate(o);
        if (*train) return run_train(o);
        if (*detect) return run_detect(o);
        if (*eval) return run_evaluate(o);
        if (*bench) return run_bench(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
