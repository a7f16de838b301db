#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "appnet/events.hpp"

namespace appnet {

/// Background process contacting a server at a constant interval.
struct BeaconSpec {
    std::int64_t interval_secs = 0;
    std::uint64_t sent_bytes = 0;
    std::uint64_t recv_bytes = 0;
    // true: fires regardless of foreground state; false: only while in foreground
    bool runs_in_background = true;

    bool operator==(const BeaconSpec&) const = default;
};

/// Generative description of one application's traffic.
struct AppProfile {
    std::string app_id;
    double send_event_rate = 0.0;  // expected send events per second
    double recv_event_rate = 0.0;
    double sent_bytes_log_mean = 0.0;
    double sent_bytes_log_sd = 0.0;
    double recv_bytes_log_mean = 0.0;
    double recv_bytes_log_sd = 0.0;
    double fg_fraction = 0.0;
    double fg_session_mean_secs = 60.0;
    double net_state_dwell_secs = 0.0;  // 0 = network never changes
    std::int64_t periodic_sync_interval_secs = 0;  // 0 = no sync
    std::uint64_t periodic_sync_bytes = 0;
    // Multiplier applied to the send/receive rates while the app is in background.
    double background_rate_scale = 1.0;
    double days_since_modified = 0.0;
    std::optional<BeaconSpec> beacon;

    bool operator==(const AppProfile&) const = default;
};

enum class PerturbationKind { version_delta, beacon_injection };

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::version_delta;
    std::map<std::string, double> factors;  // version_delta: field name -> factor
    std::optional<BeaconSpec> beacon;        // beacon_injection only
};

/// Names of the AppProfile fields a version_delta may scale.
const std::vector<std::string>& scalable_profile_fields();

/// Throws std::invalid_argument on non-finite or out-of-range parameters.
void validate_profile(const AppProfile& profile);
void validate_perturbation(const PerturbationSpec& spec);

AppProfile perturb_profile(const AppProfile& profile, const PerturbationSpec& spec);

/// version_delta with every factor raised to `exponent` (0 is the identity,
/// 1 the spec itself, 2 the spec applied twice).
PerturbationSpec with_intensity(const PerturbationSpec& spec, double exponent);

/// Seconds an app stays in the active-task list after leaving the foreground.
inline constexpr std::int64_t kActiveLingerSecs = 300;

/// Deterministic event stream for one app over [0, duration_secs]. Random
/// send/receive draws cover seconds [0, duration_secs); fixed-interval sync and
/// beacon events land on multiples of their interval up to duration_secs.
std::vector<NetworkEvent> simulate_trace(const AppProfile& profile, std::int64_t duration_secs,
                                         std::uint64_t seed);

}  // namespace appnet
