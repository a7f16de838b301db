#include "appnet/detection.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "text_io.hpp"

namespace appnet {

std::string_view to_token(AlarmRule rule) {
    switch (rule) {
    case AlarmRule::three_consecutive: return "three_consecutive";
    case AlarmRule::three_of_five: return "three_of_five";
    case AlarmRule::three_of_ten: return "three_of_ten";
    }
    return "?";
}

void AlarmState::push(bool anomalous) {
    ring_[head_] = anomalous;
    head_ = (head_ + 1) % kCapacity;
    size_ = std::min(size_ + 1, kCapacity);
    run_ = anomalous ? std::min(run_ + 1, kCapacity) : 0;
}

void AlarmState::clear() {
    ring_.fill(false);
    head_ = 0;
    size_ = 0;
    run_ = 0;
}

std::size_t AlarmState::anomalies_in_last(std::size_t n) const {
    const std::size_t take = std::min(n, size_);
    std::size_t count = 0;
    for (std::size_t i = 1; i <= take; ++i)
        if (ring_[(head_ + kCapacity - i) % kCapacity]) ++count;
    return count;
}

std::optional<Alarm> update_alarm(AlarmState& state, const Verdict& verdict) {
    state.push(verdict.is_anomalous);

    struct Rule {
        AlarmRule id;
        std::size_t span;
    };
    static constexpr Rule kRules[] = {
        {AlarmRule::three_consecutive, 3},
        {AlarmRule::three_of_five, 5},
        {AlarmRule::three_of_ten, 10},
    };
    for (const auto& rule : kRules) {
        const bool fired = rule.id == AlarmRule::three_consecutive ? state.consecutive_run() >= 3
                                                                   : state.anomalies_in_last(rule.span) >= 3;
        if (!fired) continue;
        const std::size_t observed = std::min(rule.span, state.size());
        Alarm alarm;
        alarm.rule_fired = rule.id;
        alarm.window_end_ts = verdict.window_end_ts;
        alarm.app_id = verdict.app_id;
        alarm.anomalous_rate_in_window =
            static_cast<double>(state.anomalies_in_last(rule.span)) / static_cast<double>(observed);
        alarm.version_update_seen = state.version_update_seen();
        state.clear();
        return alarm;
    }
    return std::nullopt;
}

DatasetDecision dataset_decision(std::size_t anomalous, std::size_t total, double acceptance_rate) {
    if (total == 0) throw std::invalid_argument("dataset decision needs at least one verdict");
    if (anomalous > total) throw std::invalid_argument("more anomalies than verdicts");
    DatasetDecision d;
    d.detected_anomalous_fraction = static_cast<double>(anomalous) / static_cast<double>(total);
    d.acceptance_rate = acceptance_rate;
    d.is_meaningful_deviation = d.detected_anomalous_fraction > acceptance_rate;
    return d;
}

DatasetDecision dataset_decision(std::span<const Verdict> verdicts, double acceptance_rate) {
    const auto anomalous = static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.is_anomalous; }));
    return dataset_decision(anomalous, verdicts.size(), acceptance_rate);
}

void write_alarm_line(std::ostream& out, const Alarm& alarm) {
    out << alarm.window_end_ts << '\t' << alarm.app_id << '\t' << to_token(alarm.rule_fired) << '\t'
        << detail::format_double(alarm.anomalous_rate_in_window) << '\n';
    out.flush();
}

}  // namespace appnet
