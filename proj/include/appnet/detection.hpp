#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "appnet/cross_feature.hpp"

namespace appnet {

enum class AlarmRule { three_consecutive, three_of_five, three_of_ten };

std::string_view to_token(AlarmRule rule);

struct Alarm {
    AlarmRule rule_fired = AlarmRule::three_consecutive;
    std::int64_t window_end_ts = 0;
    std::string app_id;
    double anomalous_rate_in_window = 0.0;  // anomalies / observations in the rule's window
    bool version_update_seen = false;

    bool operator==(const Alarm&) const = default;
};

/// Last ten verdicts of one app since the previous alarm. Single writer.
class AlarmState {
public:
    static constexpr std::size_t kCapacity = 10;

    void push(bool anomalous);
    void clear();

    std::size_t size() const { return size_; }
    /// Anomalies among the newest `n` entries (or all, if fewer are held).
    std::size_t anomalies_in_last(std::size_t n) const;
    /// Length of the trailing run of anomalies.
    std::size_t consecutive_run() const { return run_; }

    void note_version_update() { version_update_ = true; }
    bool version_update_seen() const { return version_update_; }

private:
    std::array<bool, kCapacity> ring_{};
    std::size_t head_ = 0;  // slot for the next entry
    std::size_t size_ = 0;
    std::size_t run_ = 0;
    bool version_update_ = false;
};

/// Adds one verdict; returns the alarm for the most specific rule satisfied
/// (three consecutive, then 3 of the last 5, then 3 of the last 10). An alarm
/// clears the window.
std::optional<Alarm> update_alarm(AlarmState& state, const Verdict& verdict);

struct DatasetDecision {
    double detected_anomalous_fraction = 0.0;
    double acceptance_rate = 0.0;
    bool is_meaningful_deviation = false;
};

inline constexpr std::array<double, 5> kAcceptanceRates = {0.05, 0.10, 0.15, 0.20, 0.25};

DatasetDecision dataset_decision(std::span<const Verdict> verdicts, double acceptance_rate);
/// Same decision from a precomputed count.
DatasetDecision dataset_decision(std::size_t anomalous, std::size_t total, double acceptance_rate);

/// `timestamp<TAB>app_id<TAB>rule<TAB>rate`
void write_alarm_line(std::ostream& out, const Alarm& alarm);

}  // namespace appnet
