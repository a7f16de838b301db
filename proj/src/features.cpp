#include "appnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace appnet {

// ---------------------------------------------------------------------------
// Extraction

namespace {

struct AppTracker {
    std::int64_t monitor_start = 0;
    bool fg = false;
    bool active = false;
    bool was_active = false;
    std::optional<std::int64_t> last_active_end;
    std::int64_t segment_start = 0;
    double fg_acc = 0.0;
    double bg_acc = 0.0;
    std::optional<std::int64_t> last_send;
    std::optional<std::int64_t> last_recv;
    std::uint64_t period_sent = 0;
    std::uint64_t period_recv = 0;
    std::vector<std::int64_t> send_times;
    std::vector<std::int64_t> recv_times;

    void close_segment(std::int64_t t) {
        (fg ? fg_acc : bg_acc) += static_cast<double>(t - segment_start);
        segment_start = t;
    }
};

double share(std::uint64_t part, std::uint64_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

double since(std::int64_t now, const std::optional<std::int64_t>& then) {
    return then ? static_cast<double>(now - *then) : kSentinel;
}

}  // namespace

std::vector<NetworkSample> extract_samples(std::span<const NetworkEvent> events,
                                           const ExtractionOptions& options) {
    if (options.period_secs <= 0) throw std::invalid_argument("extraction period must be positive");
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].timestamp < 0) throw std::invalid_argument("negative event timestamp");
        if (i > 0 && events[i].timestamp < events[i - 1].timestamp)
            throw std::invalid_argument("events are not sorted by timestamp (index " +
                                        std::to_string(i) + ")");
    }
    std::vector<NetworkSample> samples;
    if (events.empty()) return samples;

    const std::int64_t period = options.period_secs;
    const std::int64_t first_period = events.front().timestamp / period;
    const std::int64_t last_period = events.back().timestamp / period;

    std::map<std::string, AppTracker> apps;
    NetState device_net = NetState::none;
    std::size_t next = 0;

    for (std::int64_t k = first_period; k <= last_period; ++k) {
        const std::int64_t start = k * period;
        const std::int64_t end = start + period;

        for (; next < events.size() && events[next].timestamp < end; ++next) {
            const NetworkEvent& e = events[next];
            auto [it, inserted] = apps.try_emplace(e.app_id);
            AppTracker& app = it->second;
            if (inserted) {
                app.monitor_start = start;
                app.segment_start = start;
            }
            switch (e.kind) {
            case EventKind::send:
                app.period_sent += e.bytes;
                app.send_times.push_back(e.timestamp);
                app.last_send = e.timestamp;
                break;
            case EventKind::receive:
                app.period_recv += e.bytes;
                app.recv_times.push_back(e.timestamp);
                app.last_recv = e.timestamp;
                break;
            case EventKind::fg_enter:
            case EventKind::fg_exit: {
                const bool now_fg = e.kind == EventKind::fg_enter;
                if (now_fg != app.fg) {
                    app.close_segment(e.timestamp);
                    app.fg = now_fg;
                }
                break;
            }
            case EventKind::active:
                app.active = true;
                app.was_active = true;
                break;
            case EventKind::inactive:
                if (app.active) app.last_active_end = e.timestamp;
                app.active = false;
                break;
            case EventKind::net_state_change:
                device_net = e.net_state;
                break;
            }
        }

        std::uint64_t device_sent = 0;
        std::uint64_t device_recv = 0;
        for (const auto& [id, app] : apps) {
            device_sent += app.period_sent;
            device_recv += app.period_recv;
        }

        for (auto& [id, app] : apps) {
            NetworkSample s;
            s.window_end_ts = end;
            s.app_id = id;
            s.sent_bytes = app.period_sent;
            s.recv_bytes = app.period_recv;
            s.sent_pct = share(app.period_sent, device_sent);
            s.recv_pct = share(app.period_recv, device_recv);
            s.net_state = device_net;
            s.secs_since_last_send = since(end, app.last_send);
            s.secs_since_last_recv = since(end, app.last_recv);
            const double threshold = options.continuity_threshold_secs;
            s.send_mode = s.secs_since_last_send >= 0.0 && s.secs_since_last_send < threshold
                              ? TransferMode::continuous
                              : TransferMode::eventual;
            s.recv_mode = s.secs_since_last_recv >= 0.0 && s.secs_since_last_recv < threshold
                              ? TransferMode::continuous
                              : TransferMode::eventual;
            s.fg_state = app.fg;
            s.active_state = app.active;
            const double open = static_cast<double>(end - app.segment_start);
            s.fg_time_total_secs = app.fg_acc + (app.fg ? open : 0.0);
            s.bg_time_total_secs = app.bg_acc + (app.fg ? 0.0 : open);
            if (app.active)
                s.mins_since_last_active = 0.0;
            else if (app.last_active_end)
                s.mins_since_last_active = static_cast<double>(end - *app.last_active_end) / 60.0;
            else
                s.mins_since_last_active = kSentinel;
            auto dsm = options.days_since_modified_by_app.find(id);
            s.days_since_modified =
                dsm != options.days_since_modified_by_app.end() ? dsm->second : options.days_since_modified;
            s.send_times = std::move(app.send_times);
            s.recv_times = std::move(app.recv_times);
            samples.push_back(std::move(s));

            app.period_sent = 0;
            app.period_recv = 0;
            app.send_times.clear();
            app.recv_times.clear();
        }
    }
    return samples;
}

IntervalSplit split_intervals(std::span<const double> event_times, double boundary_secs) {
    IntervalSplit out;
    for (std::size_t i = 1; i < event_times.size(); ++i) {
        const double gap = event_times[i] - event_times[i - 1];
        (gap < boundary_secs ? out.inner : out.outer).push_back(gap);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature table

namespace {

const std::vector<FeatureInfo>& feature_table() {
    static const std::vector<FeatureInfo> table = [] {
        using K = FeatureKind;
        std::vector<FeatureInfo> t = {
            {"avg_sent_bytes", K::numeric, {}}, {"std_sent_bytes", K::numeric, {}},
            {"min_sent_bytes", K::numeric, {}}, {"max_sent_bytes", K::numeric, {}},
            {"avg_recv_bytes", K::numeric, {}}, {"std_recv_bytes", K::numeric, {}},
            {"min_recv_bytes", K::numeric, {}}, {"max_recv_bytes", K::numeric, {}},
            {"avg_sent_pct", K::numeric, {}}, {"std_sent_pct", K::numeric, {}},
            {"min_sent_pct", K::numeric, {}}, {"max_sent_pct", K::numeric, {}},
            {"avg_recv_pct", K::numeric, {}}, {"std_recv_pct", K::numeric, {}},
            {"min_recv_pct", K::numeric, {}}, {"max_recv_pct", K::numeric, {}},
            {"pct_sent_bytes", K::numeric, {}}, {"pct_recv_bytes", K::numeric, {}},
            {"local_inner_send_interval", K::numeric, {}}, {"local_inner_recv_interval", K::numeric, {}},
            {"local_outer_send_interval", K::numeric, {}}, {"local_outer_recv_interval", K::numeric, {}},
            {"global_inner_send_interval", K::numeric, {}}, {"global_inner_recv_interval", K::numeric, {}},
            {"global_outer_send_interval", K::numeric, {}}, {"global_outer_recv_interval", K::numeric, {}},
            {"net_state", K::categorical, {"cellular", "wifi", "none", "mixed"}},
            {"mins_since_last_send", K::numeric, {}}, {"mins_since_last_recv", K::numeric, {}},
            {"app_state1", K::categorical, {"foreground", "background", "mixed"}},
            {"app_state2", K::categorical, {"active", "nonactive", "mixed"}},
            {"fg_time_total_secs", K::numeric, {}}, {"bg_time_total_secs", K::numeric, {}},
            {"fg_time_local_secs", K::numeric, {}}, {"bg_time_local_secs", K::numeric, {}},
            {"mins_since_last_active", K::numeric, {}}, {"days_since_modified", K::numeric, {}},
        };
        if (t.size() != kFeatureCount) throw std::logic_error("feature table out of sync with Feature");
        return t;
    }();
    return table;
}

}  // namespace

const FeatureInfo& feature_info(Feature f) { return feature_table().at(static_cast<std::size_t>(f)); }

std::optional<Feature> parse_feature(std::string_view name) {
    const auto& table = feature_table();
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table[i].name == name) return static_cast<Feature>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

struct Moments {
    double avg = 0.0, std = 0.0, min = 0.0, max = 0.0;
};

template <class Get>
Moments moments(std::span<const NetworkSample> samples, Get get) {
    Moments m;
    m.min = std::numeric_limits<double>::infinity();
    m.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& s : samples) {
        const double v = get(s);
        sum += v;
        m.min = std::min(m.min, v);
        m.max = std::max(m.max, v);
    }
    const double n = static_cast<double>(samples.size());
    m.avg = sum / n;
    double ss = 0.0;
    for (const auto& s : samples) {
        const double d = get(s) - m.avg;
        ss += d * d;
    }
    m.std = std::sqrt(ss / n);
    // Averaging can land a rounding step outside [min, max] for constant input.
    m.avg = std::clamp(m.avg, m.min, m.max);
    return m;
}

void put(AggregatedVector& v, Feature first, const Moments& m) {
    const auto base = static_cast<std::size_t>(first);
    v.values[base] = m.avg;
    v.values[base + 1] = m.std;
    v.values[base + 2] = m.min;
    v.values[base + 3] = m.max;
}

double mean_or_sentinel(const std::vector<double>& xs) {
    if (xs.empty()) return kSentinel;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double ratio_or_sentinel(double sum, std::size_t count) {
    return count == 0 ? kSentinel : sum / static_cast<double>(count);
}

std::vector<double> window_times(std::span<const NetworkSample> samples, bool send) {
    std::vector<double> times;
    for (const auto& s : samples)
        for (std::int64_t t : send ? s.send_times : s.recv_times) times.push_back(static_cast<double>(t));
    return times;
}

void accumulate_global(const std::vector<double>& times, std::optional<std::int64_t>& last, double boundary,
                       double& inner_sum, std::size_t& inner_count, double& outer_sum,
                       std::size_t& outer_count) {
    for (double t : times) {
        const auto ts = static_cast<std::int64_t>(t);
        if (last) {
            const double gap = static_cast<double>(ts - *last);
            if (gap < boundary) {
                inner_sum += gap;
                ++inner_count;
            } else {
                outer_sum += gap;
                ++outer_count;
            }
        }
        last = ts;
    }
}

template <class T, class Get>
std::optional<T> single_value(std::span<const NetworkSample> samples, Get get) {
    const T first = get(samples.front());
    for (const auto& s : samples)
        if (get(s) != first) return std::nullopt;
    return first;
}

}  // namespace

AggregatedVector aggregate_window(std::span<const NetworkSample> samples, AggregationState& state,
                                  double interval_boundary_secs) {
    if (samples.empty()) throw std::invalid_argument("aggregate_window needs at least one sample");
    for (const auto& s : samples)
        if (s.app_id != samples.front().app_id)
            throw std::invalid_argument("aggregate_window samples span multiple apps");

    const NetworkSample& last = samples.back();
    AggregatedVector v;
    v.app_id = last.app_id;
    v.window_end_ts = last.window_end_ts;

    put(v, Feature::avg_sent_bytes, moments(samples, [](const auto& s) { return double(s.sent_bytes); }));
    put(v, Feature::avg_recv_bytes, moments(samples, [](const auto& s) { return double(s.recv_bytes); }));
    put(v, Feature::avg_sent_pct, moments(samples, [](const auto& s) { return s.sent_pct; }));
    put(v, Feature::avg_recv_pct, moments(samples, [](const auto& s) { return s.recv_pct; }));

    double sent = 0.0, recv = 0.0;
    for (const auto& s : samples) {
        sent += static_cast<double>(s.sent_bytes);
        recv += static_cast<double>(s.recv_bytes);
    }
    const double moved = sent + recv;
    v[Feature::pct_sent_bytes] = moved > 0.0 ? 100.0 * sent / moved : 0.0;
    v[Feature::pct_recv_bytes] = moved > 0.0 ? 100.0 * recv / moved : 0.0;

    const auto send_times = window_times(samples, true);
    const auto recv_times = window_times(samples, false);
    const auto local_send = split_intervals(send_times, interval_boundary_secs);
    const auto local_recv = split_intervals(recv_times, interval_boundary_secs);
    v[Feature::local_inner_send_interval] = mean_or_sentinel(local_send.inner);
    v[Feature::local_inner_recv_interval] = mean_or_sentinel(local_recv.inner);
    v[Feature::local_outer_send_interval] = mean_or_sentinel(local_send.outer);
    v[Feature::local_outer_recv_interval] = mean_or_sentinel(local_recv.outer);

    accumulate_global(send_times, state.last_send_ts, interval_boundary_secs, state.inner_send_sum,
                      state.inner_send_count, state.outer_send_sum, state.outer_send_count);
    accumulate_global(recv_times, state.last_recv_ts, interval_boundary_secs, state.inner_recv_sum,
                      state.inner_recv_count, state.outer_recv_sum, state.outer_recv_count);
    v[Feature::global_inner_send_interval] = ratio_or_sentinel(state.inner_send_sum, state.inner_send_count);
    v[Feature::global_inner_recv_interval] = ratio_or_sentinel(state.inner_recv_sum, state.inner_recv_count);
    v[Feature::global_outer_send_interval] = ratio_or_sentinel(state.outer_send_sum, state.outer_send_count);
    v[Feature::global_outer_recv_interval] = ratio_or_sentinel(state.outer_recv_sum, state.outer_recv_count);

    const auto net = single_value<NetState>(samples, [](const auto& s) { return s.net_state; });
    WindowNetState wn = WindowNetState::mixed;
    if (net) {
        switch (*net) {
        case NetState::cellular: wn = WindowNetState::cellular; break;
        case NetState::wifi: wn = WindowNetState::wifi; break;
        case NetState::none: wn = WindowNetState::none; break;
        }
    }
    v[Feature::net_state] = static_cast<double>(wn);

    const auto fg = single_value<bool>(samples, [](const auto& s) { return s.fg_state; });
    v[Feature::app_state1] =
        static_cast<double>(!fg ? AppState1::mixed : *fg ? AppState1::foreground : AppState1::background);
    const auto active = single_value<bool>(samples, [](const auto& s) { return s.active_state; });
    v[Feature::app_state2] =
        static_cast<double>(!active ? AppState2::mixed : *active ? AppState2::active : AppState2::nonactive);

    v[Feature::mins_since_last_send] =
        last.secs_since_last_send < 0.0 ? kSentinel : last.secs_since_last_send / 60.0;
    v[Feature::mins_since_last_recv] =
        last.secs_since_last_recv < 0.0 ? kSentinel : last.secs_since_last_recv / 60.0;

    v[Feature::fg_time_total_secs] = last.fg_time_total_secs;
    v[Feature::bg_time_total_secs] = last.bg_time_total_secs;
    v[Feature::fg_time_local_secs] = last.fg_time_total_secs - state.fg_time_total_secs;
    v[Feature::bg_time_local_secs] = last.bg_time_total_secs - state.bg_time_total_secs;
    state.fg_time_total_secs = last.fg_time_total_secs;
    state.bg_time_total_secs = last.bg_time_total_secs;

    v[Feature::mins_since_last_active] = last.mins_since_last_active;
    v[Feature::days_since_modified] = last.days_since_modified;
    return v;
}

std::vector<AggregatedVector> aggregate_samples(std::span<const NetworkSample> samples,
                                                const AggregationOptions& options) {
    if (options.period_secs <= 0 || options.window_secs <= 0)
        throw std::invalid_argument("window and period must be positive");
    if (options.window_secs % options.period_secs != 0)
        throw std::invalid_argument("aggregation window must be a multiple of the extraction period");
    const auto per_window = static_cast<std::size_t>(options.window_secs / options.period_secs);

    std::map<std::string, std::vector<const NetworkSample*>> by_app;
    for (const auto& s : samples) by_app[s.app_id].push_back(&s);

    std::vector<AggregatedVector> out;
    for (const auto& [id, list] : by_app) {
        AggregationState state;
        std::size_t i = 0;
        while (i < list.size()) {
            const std::int64_t w = (list[i]->window_end_ts - options.period_secs) / options.window_secs;
            std::vector<NetworkSample> window;
            for (; i < list.size() &&
                   (list[i]->window_end_ts - options.period_secs) / options.window_secs == w;
                 ++i)
                window.push_back(*list[i]);
            AggregatedVector v = aggregate_window(window, state, options.interval_boundary_secs);
            if (window.size() == per_window) out.push_back(std::move(v));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const AggregatedVector& a, const AggregatedVector& b) {
        return a.window_end_ts != b.window_end_ts ? a.window_end_ts < b.window_end_ts : a.app_id < b.app_id;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Schemas

const std::vector<std::string>& known_subset_ids() {
    static const std::vector<std::string> ids = {"1", "2", "full"};
    return ids;
}

FeatureSchema schema_for_subset(std::string_view id) {
    using F = Feature;
    const std::vector<Feature> subset1 = {
        F::avg_sent_bytes,
        F::avg_recv_bytes,
        F::pct_recv_bytes,
        F::global_inner_send_interval,
        F::global_inner_recv_interval,
        F::global_outer_send_interval,
        F::global_outer_recv_interval,
    };
    if (id == "1") return {"1", subset1};
    if (id == "2") {
        auto s = subset1;
        s.push_back(F::avg_sent_pct);
        s.push_back(F::avg_recv_pct);
        return {"2", s};
    }
    if (id == "full") {
        FeatureSchema s{"full", {}};
        for (std::size_t i = 0; i < kFeatureCount; ++i) s.active.push_back(static_cast<Feature>(i));
        return s;
    }
    std::string valid;
    for (const auto& k : known_subset_ids()) valid += (valid.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown feature subset '" + std::string(id) + "' (valid: " + valid + ")");
}

void validate_schema(const FeatureSchema& schema) {
    if (schema.active.empty()) throw std::invalid_argument("feature schema has no active features");
    std::set<Feature> seen;
    for (Feature f : schema.active) {
        if (static_cast<std::size_t>(f) >= kFeatureCount) throw std::invalid_argument("feature out of range");
        if (!seen.insert(f).second)
            throw std::invalid_argument("duplicate feature in schema: " + std::string(feature_info(f).name));
    }
}

}  // namespace appnet
