#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace appnet {

enum class EventKind { send, receive, fg_enter, fg_exit, active, inactive, net_state_change };

enum class NetState { cellular, wifi, none };

/// One raw observation from the monitored device.
struct NetworkEvent {
    std::int64_t timestamp = 0;  // seconds since trace start
    std::string app_id;
    EventKind kind = EventKind::send;
    std::uint64_t bytes = 0;  // 0 for non-transfer kinds
    NetState net_state = NetState::none;  // meaningful only for net_state_change

    bool operator==(const NetworkEvent&) const = default;
};

inline bool is_transfer(EventKind k) { return k == EventKind::send || k == EventKind::receive; }

std::string_view to_token(EventKind kind);
std::string_view to_token(NetState state);
std::optional<EventKind> parse_event_kind(std::string_view token);
std::optional<NetState> parse_net_state(std::string_view token);

}  // namespace appnet
