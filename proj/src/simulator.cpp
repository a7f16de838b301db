#include "appnet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace appnet {

namespace {

struct ScalableField {
    const char* name;
    double AppProfile::*real = nullptr;
    std::int64_t AppProfile::*integer = nullptr;
    std::uint64_t AppProfile::*count = nullptr;
};

const std::vector<ScalableField>& scalable_table() {
    static const std::vector<ScalableField> table = {
        {"send_event_rate", &AppProfile::send_event_rate},
        {"recv_event_rate", &AppProfile::recv_event_rate},
        {"sent_bytes_log_mean", &AppProfile::sent_bytes_log_mean},
        {"sent_bytes_log_sd", &AppProfile::sent_bytes_log_sd},
        {"recv_bytes_log_mean", &AppProfile::recv_bytes_log_mean},
        {"recv_bytes_log_sd", &AppProfile::recv_bytes_log_sd},
        {"fg_fraction", &AppProfile::fg_fraction},
        {"fg_session_mean_secs", &AppProfile::fg_session_mean_secs},
        {"net_state_dwell_secs", &AppProfile::net_state_dwell_secs},
        {"background_rate_scale", &AppProfile::background_rate_scale},
        {"days_since_modified", &AppProfile::days_since_modified},
        {"periodic_sync_interval_secs", nullptr, &AppProfile::periodic_sync_interval_secs},
        {"periodic_sync_bytes", nullptr, nullptr, &AppProfile::periodic_sync_bytes},
    };
    return table;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void require_nonneg(double v, const char* name) {
    require(std::isfinite(v) && v >= 0.0, std::string("profile field ") + name + " must be finite and >= 0");
}

// splitmix64 finaliser; used to derive independent sub-stream seeds.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Fixed-algorithm draws so traces do not depend on the standard library's
// distribution implementations.
class Stream {
public:
    Stream(std::uint64_t root, std::uint64_t tag) : engine_(mix(root ^ mix(tag))) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return uniform() < p; }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t lognormal_bytes(double log_mean, double log_sd) {
        const double v = std::exp(log_mean + log_sd * normal());
        return static_cast<std::uint64_t>(std::max(1.0, std::round(v)));
    }

private:
    std::mt19937_64 engine_;
};

enum StreamTag : std::uint64_t { kSends = 1, kReceives = 2, kSessions = 3, kStates = 4 };

}  // namespace

const std::vector<std::string>& scalable_profile_fields() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& f : scalable_table()) out.emplace_back(f.name);
        return out;
    }();
    return names;
}

void validate_profile(const AppProfile& p) {
    require_nonneg(p.send_event_rate, "send_event_rate");
    require_nonneg(p.recv_event_rate, "recv_event_rate");
    require(std::isfinite(p.sent_bytes_log_mean), "profile field sent_bytes_log_mean must be finite");
    require(std::isfinite(p.recv_bytes_log_mean), "profile field recv_bytes_log_mean must be finite");
    require_nonneg(p.sent_bytes_log_sd, "sent_bytes_log_sd");
    require_nonneg(p.recv_bytes_log_sd, "recv_bytes_log_sd");
    require(std::isfinite(p.fg_fraction) && p.fg_fraction >= 0.0 && p.fg_fraction <= 1.0,
            "profile field fg_fraction must lie in [0, 1]");
    require(std::isfinite(p.fg_session_mean_secs) && p.fg_session_mean_secs >= 1.0,
            "profile field fg_session_mean_secs must be finite and >= 1");
    require_nonneg(p.net_state_dwell_secs, "net_state_dwell_secs");
    require_nonneg(p.background_rate_scale, "background_rate_scale");
    require_nonneg(p.days_since_modified, "days_since_modified");
    require(p.periodic_sync_interval_secs >= 0, "profile field periodic_sync_interval_secs must be >= 0");
    if (p.beacon) require(p.beacon->interval_secs > 0, "beacon interval must be positive");
}

void validate_perturbation(const PerturbationSpec& spec) {
    if (spec.kind == PerturbationKind::version_delta) {
        require(!spec.beacon, "version_delta perturbation must not carry beacon fields");
        for (const auto& [name, factor] : spec.factors) {
            const auto& known = scalable_profile_fields();
            require(std::find(known.begin(), known.end(), name) != known.end(),
                    "unknown profile field in version_delta: " + name);
            require(std::isfinite(factor) && factor > 0.0,
                    "version_delta factor for " + name + " must be > 0");
        }
        return;
    }
    require(spec.factors.empty(), "beacon_injection perturbation must not carry scale factors");
    require(spec.beacon.has_value(), "beacon_injection requires beacon fields");
    require(spec.beacon->interval_secs > 0, "beacon_interval_secs must be positive");
    require(spec.beacon->sent_bytes > 0, "beacon_sent_bytes must be positive");
}

AppProfile perturb_profile(const AppProfile& profile, const PerturbationSpec& spec) {
    validate_perturbation(spec);
    AppProfile out = profile;
    if (spec.kind == PerturbationKind::beacon_injection) {
        out.beacon = spec.beacon;
        return out;
    }
    for (const auto& field : scalable_table()) {
        auto it = spec.factors.find(field.name);
        if (it == spec.factors.end()) continue;
        const double factor = it->second;
        if (field.real) {
            out.*field.real *= factor;
        } else if (field.integer) {
            out.*field.integer = static_cast<std::int64_t>(
                std::llround(static_cast<double>(out.*field.integer) * factor));
        } else {
            out.*field.count = static_cast<std::uint64_t>(
                std::llround(static_cast<double>(out.*field.count) * factor));
        }
    }
    validate_profile(out);
    return out;
}

PerturbationSpec with_intensity(const PerturbationSpec& spec, double exponent) {
    if (spec.kind != PerturbationKind::version_delta)
        throw std::invalid_argument("intensity applies to version_delta perturbations only");
    if (!std::isfinite(exponent) || exponent < 0.0) throw std::invalid_argument("intensity must be finite and >= 0");
    PerturbationSpec out = spec;
    for (auto& [name, factor] : out.factors) factor = std::pow(factor, exponent);
    return out;
}

std::vector<NetworkEvent> simulate_trace(const AppProfile& profile, std::int64_t duration_secs,
                                         std::uint64_t seed) {
    validate_profile(profile);
    if (duration_secs < 1) throw std::invalid_argument("duration_secs must be >= 1");

    Stream sends(seed, kSends);
    Stream receives(seed, kReceives);
    Stream sessions(seed, kSessions);
    Stream states(seed, kStates);

    std::vector<NetworkEvent> events;
    auto emit = [&](std::int64_t t, EventKind kind, std::uint64_t bytes = 0,
                    NetState ns = NetState::none) {
        events.push_back(NetworkEvent{t, profile.app_id, kind, bytes, ns});
    };

    const double f = profile.fg_fraction;
    const double fg_exit_p = 1.0 / profile.fg_session_mean_secs;
    const double bg_mean = f > 0.0 && f < 1.0 ? profile.fg_session_mean_secs * (1.0 - f) / f : 0.0;
    const double fg_enter_p = bg_mean > 0.0 ? std::min(1.0, 1.0 / bg_mean) : 0.0;
    const double switch_p =
        profile.net_state_dwell_secs > 0.0 ? std::min(1.0, 1.0 / profile.net_state_dwell_secs) : 0.0;

    bool fg = sessions.chance(f);
    bool active = fg;
    std::int64_t last_fg_exit = -kActiveLingerSecs - 1;
    NetState net = switch_p > 0.0 && states.chance(0.5) ? NetState::cellular : NetState::wifi;

    emit(0, EventKind::net_state_change, 0, net);
    emit(0, fg ? EventKind::fg_enter : EventKind::fg_exit);
    emit(0, active ? EventKind::active : EventKind::inactive);

    auto periodic_due = [](std::int64_t t, std::int64_t interval) {
        return interval > 0 && t > 0 && t % interval == 0;
    };

    for (std::int64_t t = 0; t <= duration_secs; ++t) {
        if (t > 0 && t < duration_secs) {
            if (f > 0.0 && f < 1.0) {
                const bool flip = fg ? sessions.chance(fg_exit_p) : sessions.chance(fg_enter_p);
                if (flip) {
                    fg = !fg;
                    if (!fg) last_fg_exit = t;
                    emit(t, fg ? EventKind::fg_enter : EventKind::fg_exit);
                }
            }
            const bool now_active = fg || t - last_fg_exit < kActiveLingerSecs;
            if (now_active != active) {
                active = now_active;
                emit(t, active ? EventKind::active : EventKind::inactive);
            }
            if (switch_p > 0.0 && states.chance(switch_p)) {
                net = net == NetState::wifi ? NetState::cellular : NetState::wifi;
                emit(t, EventKind::net_state_change, 0, net);
            }
        }

        if (t < duration_secs) {
            const double scale = fg ? 1.0 : profile.background_rate_scale;
            if (sends.chance(std::min(profile.send_event_rate * scale, 1.0)))
                emit(t, EventKind::send,
                     sends.lognormal_bytes(profile.sent_bytes_log_mean, profile.sent_bytes_log_sd));
            if (receives.chance(std::min(profile.recv_event_rate * scale, 1.0)))
                emit(t, EventKind::receive,
                     receives.lognormal_bytes(profile.recv_bytes_log_mean, profile.recv_bytes_log_sd));
        }

        if (periodic_due(t, profile.periodic_sync_interval_secs))
            emit(t, EventKind::send, profile.periodic_sync_bytes);

        if (profile.beacon && periodic_due(t, profile.beacon->interval_secs) &&
            (profile.beacon->runs_in_background || fg)) {
            emit(t, EventKind::send, profile.beacon->sent_bytes);
            if (profile.beacon->recv_bytes > 0)
                emit(t, EventKind::receive, profile.beacon->recv_bytes);
        }
    }
    return events;
}

}  // namespace appnet
