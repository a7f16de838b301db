#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "appnet/profiles.hpp"
#include "appnet/simulator.hpp"

namespace oracle {

using namespace appnet;

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b; }  // timestamps are non-negative

struct Gaps {
    double inner_sum = 0, outer_sum = 0;
    int inner_n = 0, outer_n = 0;
};

Gaps gaps(const std::vector<std::int64_t>& times, double boundary) {
    Gaps g;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double d = double(times[i] - times[i - 1]);
        if (d < boundary) {
            g.inner_sum += d;
            ++g.inner_n;
        } else {
            g.outer_sum += d;
            ++g.outer_n;
        }
    }
    return g;
}

double mean_or(double sum, int n) { return n ? sum / n : kSentinel; }

// Population moments written out the long way.
void moments(const std::vector<double>& xs, double& avg, double& sd, double& lo, double& hi) {
    double s = 0;
    for (double x : xs) s += x;
    avg = s / double(xs.size());
    double ss = 0;
    for (double x : xs) ss += (x - avg) * (x - avg);
    sd = std::sqrt(ss / double(xs.size()));
    lo = *std::min_element(xs.begin(), xs.end());
    hi = *std::max_element(xs.begin(), xs.end());
}

struct AppEvents {
    std::vector<const NetworkEvent*> all;
};

// Seconds the app spent in foreground over [from, to).
double fg_seconds(const std::vector<const NetworkEvent*>& evs, std::int64_t from, std::int64_t to) {
    double total = 0;
    bool fg = false;
    std::int64_t since = from;
    for (const auto* e : evs) {
        if (e->timestamp >= to) break;
        if (e->kind != EventKind::fg_enter && e->kind != EventKind::fg_exit) continue;
        const bool now = e->kind == EventKind::fg_enter;
        const std::int64_t t = std::max(e->timestamp, from);
        if (fg) total += double(t - since);
        fg = now;
        since = t;
    }
    if (fg) total += double(to - since);
    return total;
}

}  // namespace

std::vector<AggregatedVector> vectors(std::span<const NetworkEvent> events, const Settings& st) {
    std::vector<AggregatedVector> out;
    if (events.empty()) return out;
    const std::int64_t P = st.period, W = st.window;
    const std::int64_t last_period = floor_div(events.back().timestamp, P);

    std::map<std::string, AppEvents> apps;
    for (const auto& e : events) apps[e.app_id].all.push_back(&e);

    auto device_bytes = [&](std::int64_t a, std::int64_t b, EventKind k) {
        double total = 0;
        for (const auto& e : events)
            if (e.kind == k && e.timestamp >= a && e.timestamp < b) total += double(e.bytes);
        return total;
    };
    auto net_at = [&](std::int64_t t) {
        NetState s = NetState::none;
        for (const auto& e : events)
            if (e.kind == EventKind::net_state_change && e.timestamp < t) s = e.net_state;
        return s;
    };

    for (const auto& [id, app] : apps) {
        const auto& evs = app.all;
        const std::int64_t first_period = floor_div(evs.front()->timestamp, P);
        const std::int64_t monitor_start = first_period * P;
        const std::int64_t per_window = W / P;

        for (std::int64_t w = floor_div(monitor_start, W);; ++w) {
            const std::int64_t ws = w * W, we = ws + W;
            // every period of the window must have been sampled
            if (ws < monitor_start) continue;
            if (we / P - 1 > last_period) break;

            std::vector<double> sent, recv, spct, rpct;
            std::set<int> nets, fgs, acts;
            for (std::int64_t k = 0; k < per_window; ++k) {
                const std::int64_t a = ws + k * P, b = a + P;
                double s = 0, r = 0;
                bool fg = false, active = false;
                for (const auto* e : evs) {
                    if (e->timestamp >= b) break;
                    if (e->timestamp >= a && e->kind == EventKind::send) s += double(e->bytes);
                    if (e->timestamp >= a && e->kind == EventKind::receive) r += double(e->bytes);
                    if (e->kind == EventKind::fg_enter) fg = true;
                    if (e->kind == EventKind::fg_exit) fg = false;
                    if (e->kind == EventKind::active) active = true;
                    if (e->kind == EventKind::inactive) active = false;
                }
                const double ds = device_bytes(a, b, EventKind::send), dr = device_bytes(a, b, EventKind::receive);
                sent.push_back(s);
                recv.push_back(r);
                spct.push_back(ds > 0 ? 100.0 * s / ds : 0.0);
                rpct.push_back(dr > 0 ? 100.0 * r / dr : 0.0);
                nets.insert(int(net_at(b)));
                fgs.insert(fg);
                acts.insert(active);
            }

            AggregatedVector v;
            v.app_id = id;
            v.window_end_ts = we;
            moments(sent, v[Feature::avg_sent_bytes], v[Feature::std_sent_bytes], v[Feature::min_sent_bytes],
                    v[Feature::max_sent_bytes]);
            moments(recv, v[Feature::avg_recv_bytes], v[Feature::std_recv_bytes], v[Feature::min_recv_bytes],
                    v[Feature::max_recv_bytes]);
            moments(spct, v[Feature::avg_sent_pct], v[Feature::std_sent_pct], v[Feature::min_sent_pct],
                    v[Feature::max_sent_pct]);
            moments(rpct, v[Feature::avg_recv_pct], v[Feature::std_recv_pct], v[Feature::min_recv_pct],
                    v[Feature::max_recv_pct]);
            double ts = 0, tr = 0;
            for (double x : sent) ts += x;
            for (double x : recv) tr += x;
            v[Feature::pct_sent_bytes] = ts + tr > 0 ? 100.0 * ts / (ts + tr) : 0.0;
            v[Feature::pct_recv_bytes] = ts + tr > 0 ? 100.0 * tr / (ts + tr) : 0.0;

            std::vector<std::int64_t> ls, lr, gs, gr;
            for (const auto* e : evs) {
                if (e->timestamp >= we) break;
                const bool in = e->timestamp >= ws;
                if (e->kind == EventKind::send) {
                    gs.push_back(e->timestamp);
                    if (in) ls.push_back(e->timestamp);
                } else if (e->kind == EventKind::receive) {
                    gr.push_back(e->timestamp);
                    if (in) lr.push_back(e->timestamp);
                }
            }
            const auto gls = gaps(ls, st.boundary), glr = gaps(lr, st.boundary);
            const auto ggs = gaps(gs, st.boundary), ggr = gaps(gr, st.boundary);
            v[Feature::local_inner_send_interval] = mean_or(gls.inner_sum, gls.inner_n);
            v[Feature::local_inner_recv_interval] = mean_or(glr.inner_sum, glr.inner_n);
            v[Feature::local_outer_send_interval] = mean_or(gls.outer_sum, gls.outer_n);
            v[Feature::local_outer_recv_interval] = mean_or(glr.outer_sum, glr.outer_n);
            v[Feature::global_inner_send_interval] = mean_or(ggs.inner_sum, ggs.inner_n);
            v[Feature::global_inner_recv_interval] = mean_or(ggr.inner_sum, ggr.inner_n);
            v[Feature::global_outer_send_interval] = mean_or(ggs.outer_sum, ggs.outer_n);
            v[Feature::global_outer_recv_interval] = mean_or(ggr.outer_sum, ggr.outer_n);

            v[Feature::net_state] = nets.size() > 1 ? double(WindowNetState::mixed)
                                    : *nets.begin() == int(NetState::cellular) ? double(WindowNetState::cellular)
                                    : *nets.begin() == int(NetState::wifi)     ? double(WindowNetState::wifi)
                                                                               : double(WindowNetState::none);
            v[Feature::app_state1] = fgs.size() > 1 ? double(AppState1::mixed)
                                     : *fgs.begin()  ? double(AppState1::foreground)
                                                     : double(AppState1::background);
            v[Feature::app_state2] = acts.size() > 1 ? double(AppState2::mixed)
                                     : *acts.begin() ? double(AppState2::active)
                                                     : double(AppState2::nonactive);

            v[Feature::mins_since_last_send] = gs.empty() ? kSentinel : double(we - gs.back()) / 60.0;
            v[Feature::mins_since_last_recv] = gr.empty() ? kSentinel : double(we - gr.back()) / 60.0;

            const double fg_total = fg_seconds(evs, monitor_start, we);
            const double fg_before = ws > monitor_start ? fg_seconds(evs, monitor_start, ws) : 0.0;
            const double span = double(we - monitor_start), span_before = double(std::max(ws - monitor_start, std::int64_t{0}));
            v[Feature::fg_time_total_secs] = fg_total;
            v[Feature::bg_time_total_secs] = span - fg_total;
            v[Feature::fg_time_local_secs] = fg_total - fg_before;
            v[Feature::bg_time_local_secs] = (span - fg_total) - (span_before - fg_before);

            // replay the active flag to find when it last dropped
            bool active = false;
            std::optional<std::int64_t> dropped;
            for (const auto* e : evs) {
                if (e->timestamp >= we) break;
                if (e->kind == EventKind::active) active = true;
                if (e->kind == EventKind::inactive) {
                    if (active) dropped = e->timestamp;
                    active = false;
                }
            }
            v[Feature::mins_since_last_active] = active ? 0.0 : dropped ? double(we - *dropped) / 60.0 : kSentinel;
            v[Feature::days_since_modified] = st.days;
            out.push_back(std::move(v));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.window_end_ts, a.app_id) < std::tie(b.window_end_ts, b.app_id);
    });
    return out;
}

namespace {

bool exact_feature(Feature f) {
    switch (f) {
    case Feature::min_sent_bytes: case Feature::max_sent_bytes:
    case Feature::min_recv_bytes: case Feature::max_recv_bytes:
    case Feature::net_state: case Feature::app_state1: case Feature::app_state2:
    case Feature::fg_time_total_secs: case Feature::bg_time_total_secs:
    case Feature::fg_time_local_secs: case Feature::bg_time_local_secs:
    case Feature::days_since_modified:
        return true;
    default:
        return false;
    }
}

}  // namespace

std::optional<std::string> compare(std::span<const AggregatedVector> expected, std::span<const AggregatedVector> actual,
                                   double rel_tol) {
    if (expected.size() != actual.size())
        return fmt::format("vector count {} vs {}", expected.size(), actual.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& e = expected[i];
        const auto& a = actual[i];
        if (e.app_id != a.app_id || e.window_end_ts != a.window_end_ts)
            return fmt::format("row {}: key {}@{} vs {}@{}", i, e.app_id, e.window_end_ts, a.app_id, a.window_end_ts);
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const double x = e.values[f], y = a.values[f];
            const bool ok = exact_feature(Feature(f))
                                ? x == y
                                : std::abs(x - y) <= rel_tol * std::max({std::abs(x), std::abs(y), 1e-12});
            if (!ok)
                return fmt::format("row {} ({}@{}) {}: expected {} got {}", i, e.app_id, e.window_end_ts,
                                   feature_info(Feature(f)).name, x, y);
        }
    }
    return std::nullopt;
}

std::vector<AlarmEvent> alarms(const std::vector<bool>& verdicts) {
    std::vector<AlarmEvent> out;
    std::vector<bool> seen;  // since the last alarm
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        seen.push_back(verdicts[i]);
        auto tail = [&](std::size_t n) {
            const std::size_t from = seen.size() > n ? seen.size() - n : 0;
            return std::vector<bool>(seen.begin() + std::ptrdiff_t(from), seen.end());
        };
        auto count = [](const std::vector<bool>& xs) { return std::size_t(std::count(xs.begin(), xs.end(), true)); };
        const auto t3 = tail(3), t5 = tail(5), t10 = tail(10);
        std::optional<AlarmEvent> hit;
        if (t3.size() == 3 && count(t3) == 3)
            hit = AlarmEvent{i, AlarmRule::three_consecutive, 1.0};
        else if (count(t5) >= 3)
            hit = AlarmEvent{i, AlarmRule::three_of_five, double(count(t5)) / double(t5.size())};
        else if (count(t10) >= 3)
            hit = AlarmEvent{i, AlarmRule::three_of_ten, double(count(t10)) / double(t10.size())};
        if (hit) {
            out.push_back(*hit);
            seen.clear();
        }
    }
    return out;
}

std::vector<NetworkEvent> merged_trace(const std::vector<std::string>& profiles, std::int64_t duration,
                                       std::uint64_t seed) {
    std::vector<NetworkEvent> all;
    std::uint64_t k = 0;
    for (const auto& name : profiles) {
        auto trace = simulate_trace(builtin_library().profile(name), duration, seed * 1000 + k++);
        all.insert(all.end(), trace.begin(), trace.end());
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const NetworkEvent& a, const NetworkEvent& b) { return a.timestamp < b.timestamp; });
    return all;
}

}  // namespace oracle
