#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "appnet/detection.hpp"
#include "appnet/evaluation.hpp"
#include "appnet/io.hpp"
#include "appnet/simulator.hpp"

namespace fs = std::filesystem;
using namespace appnet;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("appnet_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& err_file = "/dev/null") {
    const std::string cmd = std::string(APPNET_CLI) + " " + args + " >/dev/null 2>" + err_file;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("file pipeline reproduces the in-process verdicts") {
    TempDir tmp;
    REQUIRE(run("simulate --profile whatsapp --duration 21600 --seed 9 --out " + (tmp / "train.trace")) == 0);
    REQUIRE(run("simulate --profile whatsapp --perturb whatsapp_trojan --duration 7200 --seed 10 --out " +
                (tmp / "test.trace")) == 0);
    REQUIRE(run("aggregate --in " + (tmp / "train.trace") + " --out " + (tmp / "train.csv")) == 0);
    REQUIRE(run("aggregate --in " + (tmp / "test.trace") + " --out " + (tmp / "test.csv")) == 0);
    REQUIRE(run("train --in " + (tmp / "train.csv") + " --out " + (tmp / "model.txt")) == 0);
    REQUIRE(run("detect --model " + (tmp / "model.txt") + " --in " + (tmp / "test.csv") + " --out " +
                (tmp / "verdicts.tsv") + " --alarms " + (tmp / "alarms.log")) == 0);

    // same steps in process
    auto from_trace = [](const std::string& path) {
        std::ifstream in(path);
        return aggregate_samples(extract_samples(read_trace(in)));
    };
    const auto& profile = builtin_library().profile("whatsapp");
    CHECK(slurp(tmp / "train.trace") == [&] {
        std::ostringstream o;
        write_trace(o, simulate_trace(profile, 21600, 9));
        return o.str();
    }());
    auto train = from_trace(tmp / "train.trace");
    train.resize(std::min<std::size_t>(train.size(), 150));
    const auto model = train_calibrated_model(train, schema_for_subset("1"), BaseLearner::decision_table, 0.2);
    std::ostringstream want, want_alarms;
    write_verdict_header(want);
    std::size_t anomalous = 0, total = 0;
    AlarmState state;
    for (const auto& v : from_trace(tmp / "test.trace")) {
        const auto verdict = classify_instance(model, v);
        write_verdict_line(want, verdict);
        if (auto a = update_alarm(state, verdict)) write_alarm_line(want_alarms, *a);
        anomalous += verdict.is_anomalous;
        ++total;
    }
    CHECK(slurp(tmp / "verdicts.tsv") == want.str());
    CHECK(slurp(tmp / "alarms.log") == want_alarms.str());
    CHECK(double(anomalous) / double(total) >= 0.6);
}

TEST_CASE("benign trace against its own model raises no alarm") {
    TempDir tmp;
    REQUIRE(run("simulate --profile gmail --duration 21600 --seed 4 --out " + (tmp / "t.trace")) == 0);
    REQUIRE(run("aggregate --in " + (tmp / "t.trace") + " --out " + (tmp / "v.csv")) == 0);
    REQUIRE(run("train --in " + (tmp / "v.csv") + " --out " + (tmp / "m.txt")) == 0);
    REQUIRE(run("detect --model " + (tmp / "m.txt") + " --in " + (tmp / "v.csv") + " --alarms " + (tmp / "a.log")) ==
            0);
    CHECK(fs::exists(tmp / "a.log"));
    CHECK(slurp(tmp / "a.log").empty());
}

TEST_CASE("exit codes") {
    TempDir tmp;
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("simulate") == 1);
    CHECK(run("simulate --profile nobody") == 1);
    CHECK(run("aggregate --in x --window 7") == 1);
    CHECK(run("--help") == 0);

    REQUIRE(run("simulate --profile snake --duration 3600 --seed 1 --out " + (tmp / "s.trace")) == 0);
    REQUIRE(run("aggregate --in " + (tmp / "s.trace") + " --out " + (tmp / "s.csv")) == 0);
    const auto err = tmp / "err.txt";
    CHECK(run("train --in " + (tmp / "s.csv") + " --subset 9", err) == 1);
    CHECK(slurp(err).find("valid: 1, 2, full") != std::string::npos);
    CHECK(run("train --in " + (tmp / "s.csv") + " --learner svm", err) == 1);
    CHECK(slurp(err).find("decision_table") != std::string::npos);

    CHECK(run("aggregate --in " + (tmp / "missing.trace")) == 2);
    std::ofstream(tmp / "bad.trace") << "# appnet-trace 1\n0\ta\tsend\t10\t-\n3\ta\tsend\tmany\t-\n";
    CHECK(run("aggregate --in " + (tmp / "bad.trace"), err) == 2);
    CHECK(slurp(err).find("line 3") != std::string::npos);
    std::ofstream(tmp / "bad.model") << "cross_feature_model 1\nsubset 1\nlearner decision_table\nwhat\n";
    CHECK(run("detect --model " + (tmp / "bad.model") + " --in " + (tmp / "s.csv"), err) == 2);
    CHECK(slurp(err).find("line 4") != std::string::npos);
    std::ofstream(tmp / "bad.yaml") << "format: 1\ndatasets: []\n";
    CHECK(run("evaluate --manifest " + (tmp / "bad.yaml")) == 2);
}
