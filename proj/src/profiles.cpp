#include "appnet/profiles.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "appnet/error.hpp"
#include "yaml_util.hpp"

namespace appnet {

const AppProfile& ProfileLibrary::profile(const std::string& name) const {
    auto it = profiles.find(name);
    if (it == profiles.end()) {
        std::string known;
        for (const auto& [k, v] : profiles) known += (known.empty() ? "" : ", ") + k;
        throw std::invalid_argument("unknown profile '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

const PerturbationSpec& ProfileLibrary::perturbation(const std::string& name) const {
    auto it = perturbations.find(name);
    if (it == perturbations.end()) throw std::invalid_argument("unknown perturbation '" + name + "'");
    return it->second;
}

namespace {

struct Preset {
    AppProfile profile;
    BeaconSpec trojan;
};

AppProfile make(const char* id, double send_rate, double recv_rate, double sent_bytes, double recv_bytes,
                double fg_fraction, double session_secs, double bg_scale, std::int64_t sync_secs,
                std::uint64_t sync_bytes, double dwell_secs, double days) {
    AppProfile p;
    p.app_id = id;
    p.send_event_rate = send_rate;
    p.recv_event_rate = recv_rate;
    p.sent_bytes_log_mean = std::log(sent_bytes);
    p.sent_bytes_log_sd = 0.6;
    p.recv_bytes_log_mean = std::log(recv_bytes);
    p.recv_bytes_log_sd = 0.8;
    p.fg_fraction = fg_fraction;
    p.fg_session_mean_secs = session_secs;
    p.background_rate_scale = bg_scale;
    p.periodic_sync_interval_secs = sync_secs;
    p.periodic_sync_bytes = sync_bytes;
    p.net_state_dwell_secs = dwell_secs;
    p.days_since_modified = days;
    return p;
}

std::vector<Preset> make_presets() {
    // Rates are per second while in foreground; byte sizes are lognormal medians.
    return {
        {make("twitter", 0.05, 0.15, 800, 6000, 0.30, 300, 0.05, 300, 1500, 1800, 40),
         {29, 50000, 50000, true}},
        {make("facebook", 0.08, 0.25, 1100, 13000, 0.35, 400, 0.05, 600, 2000, 2400, 25),
         {29, 50000, 150000, true}},
        {make("gmail", 0.03, 0.06, 1800, 5000, 0.10, 120, 0.20, 180, 1000, 1200, 60),
         {29, 50000, 50000, true}},
        {make("groupme", 0.06, 0.08, 400, 1100, 0.20, 200, 0.10, 120, 400, 3000, 10),
         {29, 50000, 50000, true}},
        {make("whatsapp", 0.10, 0.10, 650, 650, 0.25, 180, 0.10, 240, 300, 2000, 15),
         {29, 50000, 50000, true}},
        {make("firefox", 0.08, 0.25, 650, 12000, 0.40, 600, 0.05, 600, 800, 1500, 90),
         {29, 50000, 150000, true}},
        {make("linkedin", 0.04, 0.10, 1100, 8000, 0.10, 200, 0.02, 900, 1200, 2500, 120),
         {29, 50000, 50000, true}},
        {make("snake", 0.01, 0.02, 400, 8000, 0.40, 600, 0.0, 60, 500, 3600, 200),
         {29, 50000, 50000, true}},
        {make("fling", 0.03, 0.05, 650, 13000, 0.60, 900, 0.0, 0, 0, 3600, 150),
         {29, 50000, 50000, true}},
        {make("sudoku", 0.03, 0.05, 400, 3000, 0.30, 900, 0.05, 300, 400, 3600, 300),
         {29, 50000, 50000, true}},
    };
}

ProfileLibrary make_builtin() {
    ProfileLibrary lib;
    for (auto& preset : make_presets()) {
        const std::string name = preset.profile.app_id;
        validate_profile(preset.profile);
        lib.profiles[name] = preset.profile;

        PerturbationSpec update;
        update.kind = PerturbationKind::version_delta;
        // bigger uploads, fewer and smaller downloads, sparser background and sync
        update.factors = {{"send_event_rate", 3.0},        {"sent_bytes_log_mean", 1.4},
                          {"recv_event_rate", 0.4},        {"recv_bytes_log_mean", 0.8},
                          {"background_rate_scale", 0.2},  {"periodic_sync_interval_secs", 3.0},
                          {"days_since_modified", 0.01}};
        lib.perturbations[name + "_v2"] = update;

        PerturbationSpec minor;
        minor.kind = PerturbationKind::version_delta;
        minor.factors = {{"fg_session_mean_secs", 1.1}, {"days_since_modified", 0.01}};
        lib.perturbations[name + "_v2_minor"] = minor;

        PerturbationSpec trojan;
        trojan.kind = PerturbationKind::beacon_injection;
        trojan.beacon = preset.trojan;
        lib.perturbations[name + "_trojan"] = trojan;
    }
    return lib;
}

// ---------------------------------------------------------------------------
// YAML loading

using detail::fail_at;
using detail::scalar;

void read_beacon_field(BeaconSpec& b, const std::string& key, const YAML::Node& value) {
    if (key == "beacon_interval_secs")
        b.interval_secs = scalar<std::int64_t>(value, key);
    else if (key == "beacon_sent_bytes")
        b.sent_bytes = scalar<std::uint64_t>(value, key);
    else if (key == "beacon_recv_bytes")
        b.recv_bytes = scalar<std::uint64_t>(value, key);
    else if (key == "beacon_runs_in_background")
        b.runs_in_background = scalar<bool>(value, key);
    else
        fail_at(value, "unknown beacon field '" + key + "'");
}

AppProfile read_profile(const std::string& name, const YAML::Node& node, const ProfileLibrary& lib) {
    if (!node.IsMap()) fail_at(node, "profile '" + name + "' must be a map");
    AppProfile p;
    p.app_id = name;
    if (node["base"]) {
        const auto base = scalar<std::string>(node["base"], "base");
        auto it = lib.profiles.find(base);
        if (it == lib.profiles.end()) fail_at(node["base"], "unknown base profile '" + base + "'");
        p = it->second;
        p.app_id = name;
    }
    std::optional<BeaconSpec> beacon;
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        if (key == "base") continue;
        if (key == "app_id") p.app_id = scalar<std::string>(v, key);
        else if (key == "send_event_rate") p.send_event_rate = scalar<double>(v, key);
        else if (key == "recv_event_rate") p.recv_event_rate = scalar<double>(v, key);
        else if (key == "sent_bytes_log_mean") p.sent_bytes_log_mean = scalar<double>(v, key);
        else if (key == "sent_bytes_log_sd") p.sent_bytes_log_sd = scalar<double>(v, key);
        else if (key == "recv_bytes_log_mean") p.recv_bytes_log_mean = scalar<double>(v, key);
        else if (key == "recv_bytes_log_sd") p.recv_bytes_log_sd = scalar<double>(v, key);
        else if (key == "fg_fraction") p.fg_fraction = scalar<double>(v, key);
        else if (key == "fg_session_mean_secs") p.fg_session_mean_secs = scalar<double>(v, key);
        else if (key == "net_state_dwell_secs") p.net_state_dwell_secs = scalar<double>(v, key);
        else if (key == "periodic_sync_interval_secs") p.periodic_sync_interval_secs = scalar<std::int64_t>(v, key);
        else if (key == "periodic_sync_bytes") p.periodic_sync_bytes = scalar<std::uint64_t>(v, key);
        else if (key == "background_rate_scale") p.background_rate_scale = scalar<double>(v, key);
        else if (key == "days_since_modified") p.days_since_modified = scalar<double>(v, key);
        else if (key.rfind("beacon_", 0) == 0) {
            if (!beacon) beacon = p.beacon.value_or(BeaconSpec{});
            read_beacon_field(*beacon, key, v);
        } else {
            fail_at(kv.first, "unknown profile field '" + key + "'");
        }
    }
    if (beacon) p.beacon = beacon;
    try {
        validate_profile(p);
    } catch (const std::invalid_argument& e) {
        fail_at(node, "profile '" + name + "': " + e.what());
    }
    return p;
}

PerturbationSpec read_perturbation(const std::string& name, const YAML::Node& node) {
    if (!node.IsMap()) fail_at(node, "perturbation '" + name + "' must be a map");
    if (!node["kind"]) fail_at(node, "perturbation '" + name + "' needs a kind");
    PerturbationSpec spec;
    const auto kind = scalar<std::string>(node["kind"], "kind");
    if (kind == "version_delta")
        spec.kind = PerturbationKind::version_delta;
    else if (kind == "beacon_injection")
        spec.kind = PerturbationKind::beacon_injection;
    else
        fail_at(node["kind"], "unknown perturbation kind '" + kind + "' (valid: version_delta, beacon_injection)");

    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (key == "kind") continue;
        if (key == "factors") {
            if (!kv.second.IsMap()) fail_at(kv.second, "factors must be a map");
            for (const auto& f : kv.second) spec.factors[f.first.as<std::string>()] = scalar<double>(f.second, "factors");
        } else if (key.rfind("beacon_", 0) == 0) {
            if (!spec.beacon) spec.beacon = BeaconSpec{};
            read_beacon_field(*spec.beacon, key, kv.second);
        } else {
            fail_at(kv.first, "unknown perturbation field '" + key + "'");
        }
    }
    try {
        validate_perturbation(spec);
    } catch (const std::invalid_argument& e) {
        fail_at(node, "perturbation '" + name + "': " + e.what());
    }
    return spec;
}

}  // namespace

const ProfileLibrary& builtin_library() {
    static const ProfileLibrary lib = make_builtin();
    return lib;
}

const std::vector<std::string>& builtin_profile_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& p : make_presets()) out.push_back(p.profile.app_id);
        return out;
    }();
    return names;
}

ProfileLibrary load_library(std::istream& in, const ProfileLibrary& base) {
    const YAML::Node root = detail::load_yaml(in);
    ProfileLibrary lib = base;
    if (root.IsNull()) return lib;
    if (!root.IsMap()) fail_at(root, "profile file must be a map");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key == "format") {
            if (scalar<int>(kv.second, key) != 1) fail_at(kv.second, "unsupported profile file format");
        } else if (key == "profiles") {
            for (const auto& p : kv.second) {
                const auto name = p.first.as<std::string>();
                lib.profiles[name] = read_profile(name, p.second, lib);
            }
        } else if (key == "perturbations") {
            for (const auto& p : kv.second) {
                const auto name = p.first.as<std::string>();
                lib.perturbations[name] = read_perturbation(name, p.second);
            }
        } else {
            fail_at(kv.first, "unknown top-level key '" + key + "'");
        }
    }
    return lib;
}

ProfileLibrary load_library_file(const std::filesystem::path& path, const ProfileLibrary& base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profile file " + path.string());
    return load_library(in, base);
}

}  // namespace appnet
