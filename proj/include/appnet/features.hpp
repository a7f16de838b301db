#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "appnet/events.hpp"

namespace appnet {

/// Value used for "never happened" and "no qualifying interval".
inline constexpr double kSentinel = -1.0;

enum class TransferMode { eventual, continuous };

struct ExtractionOptions {
    std::int64_t period_secs = 5;
    double continuity_threshold_secs = 30.0;
    double days_since_modified = 0.0;
    std::map<std::string, double> days_since_modified_by_app;
};

/// One extraction-period snapshot for one app.
struct NetworkSample {
    std::int64_t window_end_ts = 0;  // exclusive end of the period [end - period, end)
    std::string app_id;
    std::uint64_t sent_bytes = 0;
    std::uint64_t recv_bytes = 0;
    double sent_pct = 0.0;  // share of all monitored apps' sent bytes in the period
    double recv_pct = 0.0;
    NetState net_state = NetState::none;
    double secs_since_last_send = kSentinel;
    double secs_since_last_recv = kSentinel;
    TransferMode send_mode = TransferMode::eventual;
    TransferMode recv_mode = TransferMode::eventual;
    bool fg_state = false;
    bool active_state = false;
    double fg_time_total_secs = 0.0;
    double bg_time_total_secs = 0.0;
    double mins_since_last_active = kSentinel;
    double days_since_modified = 0.0;
    // Timestamps of the transfer events inside the period; needed for the
    // interval aggregates.
    std::vector<std::int64_t> send_times;
    std::vector<std::int64_t> recv_times;

    bool operator==(const NetworkSample&) const = default;
};

/// Events must be sorted by timestamp. Emits one sample per period per app,
/// from the period of the app's first event through the period of the last
/// event in the stream, ordered by (window_end_ts, app_id).
std::vector<NetworkSample> extract_samples(std::span<const NetworkEvent> events,
                                           const ExtractionOptions& options = {});

struct IntervalSplit {
    std::vector<double> inner;
    std::vector<double> outer;
};

/// Gaps between consecutive event times; gaps below `boundary_secs` are inner,
/// the rest outer.
IntervalSplit split_intervals(std::span<const double> event_times, double boundary_secs = 30.0);

// ---------------------------------------------------------------------------
// Aggregated features

enum class FeatureKind { numeric, categorical };

enum class Feature : std::size_t {
    avg_sent_bytes, std_sent_bytes, min_sent_bytes, max_sent_bytes,
    avg_recv_bytes, std_recv_bytes, min_recv_bytes, max_recv_bytes,
    avg_sent_pct, std_sent_pct, min_sent_pct, max_sent_pct,
    avg_recv_pct, std_recv_pct, min_recv_pct, max_recv_pct,
    pct_sent_bytes, pct_recv_bytes,
    local_inner_send_interval, local_inner_recv_interval,
    local_outer_send_interval, local_outer_recv_interval,
    global_inner_send_interval, global_inner_recv_interval,
    global_outer_send_interval, global_outer_recv_interval,
    net_state,
    mins_since_last_send, mins_since_last_recv,
    app_state1, app_state2,
    fg_time_total_secs, bg_time_total_secs, fg_time_local_secs, bg_time_local_secs,
    mins_since_last_active, days_since_modified,
    count_
};

inline constexpr std::size_t kFeatureCount = static_cast<std::size_t>(Feature::count_);

struct FeatureInfo {
    std::string_view name;
    FeatureKind kind;
    std::vector<std::string_view> categories;  // code -> token, categorical only
};

const FeatureInfo& feature_info(Feature f);
std::optional<Feature> parse_feature(std::string_view name);

// Category codes of the categorical aggregates.
enum class WindowNetState { cellular, wifi, none, mixed };
enum class AppState1 { foreground, background, mixed };
enum class AppState2 { active, nonactive, mixed };

enum class Label { normal, anomalous };

/// One aggregation window for one app. Categorical features are stored as
/// their category code.
struct AggregatedVector {
    std::int64_t window_end_ts = 0;
    std::string app_id;
    std::array<double, kFeatureCount> values{};
    std::optional<Label> label;

    double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }

    bool operator==(const AggregatedVector&) const = default;
};

/// Per-(app, trace) running accumulator carried across windows.
struct AggregationState {
    std::optional<std::int64_t> last_send_ts;
    std::optional<std::int64_t> last_recv_ts;
    double inner_send_sum = 0.0, outer_send_sum = 0.0;
    double inner_recv_sum = 0.0, outer_recv_sum = 0.0;
    std::size_t inner_send_count = 0, outer_send_count = 0;
    std::size_t inner_recv_count = 0, outer_recv_count = 0;
    double fg_time_total_secs = 0.0;
    double bg_time_total_secs = 0.0;
};

/// Samples must belong to one app and one window. Updates `state`.
AggregatedVector aggregate_window(std::span<const NetworkSample> samples, AggregationState& state,
                                  double interval_boundary_secs = 30.0);

struct AggregationOptions {
    std::int64_t window_secs = 60;
    std::int64_t period_secs = 5;
    double interval_boundary_secs = 30.0;
};

/// Groups samples into fixed windows per app and aggregates them in time
/// order. Only complete windows are emitted; incomplete ones still advance
/// the running state. Output ordered by (window_end_ts, app_id).
std::vector<AggregatedVector> aggregate_samples(std::span<const NetworkSample> samples,
                                                const AggregationOptions& options = {});

// ---------------------------------------------------------------------------
// Schemas

struct FeatureSchema {
    std::string id;
    std::vector<Feature> active;

    std::size_t size() const { return active.size(); }
};

/// Known ids: "1", "2" (the two selected subsets) and "full".
FeatureSchema schema_for_subset(std::string_view id);
const std::vector<std::string>& known_subset_ids();

/// Throws std::invalid_argument on duplicates or an empty schema.
void validate_schema(const FeatureSchema& schema);

}  // namespace appnet
