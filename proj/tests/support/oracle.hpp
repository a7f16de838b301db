#pragma once

// Brute-force recomputation of aggregated vectors straight from raw events.
// Shares no code with the extraction/aggregation pipeline.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appnet/detection.hpp"
#include "appnet/events.hpp"
#include "appnet/features.hpp"

namespace oracle {

struct Settings {
    std::int64_t period = 5;
    std::int64_t window = 60;
    double boundary = 30.0;
    double days = 0.0;
};

std::vector<appnet::AggregatedVector> vectors(std::span<const appnet::NetworkEvent> events, const Settings& s = {});

/// Description of the first mismatch, if any. Counts, extremes, states and
/// clock totals must match exactly; averages and ratios within `rel_tol`.
std::optional<std::string> compare(std::span<const appnet::AggregatedVector> expected,
                                   std::span<const appnet::AggregatedVector> actual, double rel_tol = 1e-9);

struct AlarmEvent {
    std::size_t step = 0;  // 0-based index of the verdict that fired
    appnet::AlarmRule rule = appnet::AlarmRule::three_consecutive;
    double rate = 0.0;
};

/// Alarm rules evaluated directly on the verdicts seen since the last alarm.
std::vector<AlarmEvent> alarms(const std::vector<bool>& verdicts);

/// Several simulated apps merged into one time-ordered stream.
std::vector<appnet::NetworkEvent> merged_trace(const std::vector<std::string>& profiles, std::int64_t duration,
                                               std::uint64_t seed);

}  // namespace oracle
