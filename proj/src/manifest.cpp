#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "appnet/error.hpp"
#include "appnet/evaluation.hpp"
#include "yaml_util.hpp"

namespace appnet {

namespace {

using detail::fail_at;
using detail::scalar;

GroundTruth parse_truth(const YAML::Node& node) {
    const auto t = scalar<std::string>(node, "label");
    if (t == "same_version") return GroundTruth::same_version;
    if (t == "different_version") return GroundTruth::different_version;
    if (t == "malware") return GroundTruth::malware;
    fail_at(node, "unknown label '" + t + "' (valid: same_version, different_version, malware)");
}

TraceSource read_source(const YAML::Node& node, const std::string& profile, const std::string& what,
                        const ProfileLibrary& lib) {
    if (!node.IsMap()) fail_at(node, what + " must be a map");
    TraceSource s;
    s.profile = profile;
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (key == "seed")
            s.seed = scalar<std::uint64_t>(kv.second, key);
        else if (key == "duration_secs")
            s.duration_secs = scalar<std::int64_t>(kv.second, key);
        else if (key == "perturbation")
            s.perturbation = scalar<std::string>(kv.second, key);
        else if (key == "profile")
            s.profile = scalar<std::string>(kv.second, key);
        else
            fail_at(kv.first, "unknown " + what + " field '" + key + "'");
    }
    if (s.duration_secs <= 0) fail_at(node, what + " needs a positive duration_secs");
    if (!lib.profiles.count(s.profile)) fail_at(node, "unknown profile '" + s.profile + "'");
    if (!s.perturbation.empty() && !lib.perturbations.count(s.perturbation))
        fail_at(node, "unknown perturbation '" + s.perturbation + "'");
    return s;
}

DatasetSpec read_dataset(const YAML::Node& node, const ProfileLibrary& lib) {
    if (!node.IsMap()) fail_at(node, "dataset entry must be a map");
    for (const char* required : {"name", "profile", "label", "train", "test"})
        if (!node[required]) fail_at(node, std::string("dataset needs '") + required + "'");
    DatasetSpec d;
    d.name = scalar<std::string>(node["name"], "name");
    d.group = d.name;
    const auto profile = scalar<std::string>(node["profile"], "profile");
    d.truth = parse_truth(node["label"]);
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (key == "group")
            d.group = scalar<std::string>(kv.second, key);
        else if (key == "network_change")
            d.network_change = scalar<bool>(kv.second, key);
        else if (key != "name" && key != "profile" && key != "label" && key != "train" && key != "test")
            fail_at(kv.first, "unknown dataset field '" + key + "'");
    }
    d.train = read_source(node["train"], profile, "train", lib);
    const YAML::Node test = node["test"];
    if (test.IsMap() && test["split"]) {
        if (test.size() != 1) fail_at(test, "test with 'split' takes no other fields");
        d.split_test = scalar<bool>(test["split"], "split");
    }
    if (!d.split_test) d.test = read_source(test, profile, "test", lib);
    return d;
}

template <class T>
std::vector<T> read_list(const YAML::Node& node, const std::string& key) {
    if (!node.IsSequence() || node.size() == 0) fail_at(node, "'" + key + "' must be a non-empty list");
    std::vector<T> out;
    for (const auto& item : node) out.push_back(scalar<T>(item, key));
    return out;
}

}  // namespace

Manifest load_manifest(std::istream& in, const std::filesystem::path& base_dir) {
    const YAML::Node root = detail::load_yaml(in);
    if (!root.IsMap()) fail_at(root, "manifest must be a map");
    if (!root["format"] || scalar<int>(root["format"], "format") != 1)
        fail_at(root, "manifest needs 'format: 1'");

    Manifest m;
    m.library = builtin_library();
    if (root["profiles_file"]) {
        const auto rel = scalar<std::string>(root["profiles_file"], "profiles_file");
        m.library = load_library_file(base_dir / rel, builtin_library());
    }

    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        if (key == "format" || key == "profiles_file" || key == "datasets") continue;
        if (key == "name") {
            m.name = scalar<std::string>(v, key);
        } else if (key == "learners") {
            m.learners.clear();
            for (const auto& t : read_list<std::string>(v, key)) {
                try {
                    m.learners.push_back(parse_base_learner(t));
                } catch (const std::invalid_argument& e) {
                    fail_at(v, e.what());
                }
            }
        } else if (key == "subsets") {
            m.subsets = read_list<std::string>(v, key);
            for (const auto& s : m.subsets) {
                const auto& known = known_subset_ids();
                if (std::find(known.begin(), known.end(), s) == known.end())
                    fail_at(v, "unknown feature subset '" + s + "'");
            }
        } else if (key == "acceptance_rates") {
            m.acceptance_rates = read_list<double>(v, key);
            for (double r : m.acceptance_rates)
                if (!(r >= 0.0 && r < 1.0)) fail_at(v, "acceptance rates must lie in [0, 1)");
        } else if (key == "train_cap") {
            m.settings.train_cap = scalar<std::size_t>(v, key);
        } else if (key == "test_cap") {
            m.settings.test_cap = scalar<std::size_t>(v, key);
        } else if (key == "calibration_fraction") {
            m.settings.calibration_fraction = scalar<double>(v, key);
            if (!(m.settings.calibration_fraction > 0.0 && m.settings.calibration_fraction < 1.0))
                fail_at(v, "calibration_fraction must lie in (0, 1)");
        } else if (key == "period_secs") {
            m.settings.period_secs = scalar<std::int64_t>(v, key);
        } else if (key == "window_secs") {
            m.settings.window_secs = scalar<std::int64_t>(v, key);
        } else {
            fail_at(kv.first, "unknown manifest field '" + key + "'");
        }
    }
    if (m.settings.period_secs <= 0 || m.settings.window_secs <= 0 ||
        m.settings.window_secs % m.settings.period_secs != 0)
        fail_at(root, "window_secs must be a positive multiple of period_secs");
    if (m.settings.train_cap < 10) fail_at(root, "train_cap must be at least 10");
    if (m.settings.test_cap < 1) fail_at(root, "test_cap must be positive");

    const YAML::Node datasets = root["datasets"];
    if (!datasets || !datasets.IsSequence() || datasets.size() == 0)
        fail_at(root, "manifest needs a non-empty 'datasets' list");
    std::set<std::string> names;
    for (const auto& d : datasets) {
        auto spec = read_dataset(d, m.library);
        if (!names.insert(spec.name).second) fail_at(d, "duplicate dataset name '" + spec.name + "'");
        m.datasets.push_back(std::move(spec));
    }
    return m;
}

Manifest load_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    return load_manifest(in, path.parent_path());
}

}  // namespace appnet
