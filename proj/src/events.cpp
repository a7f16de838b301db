#include "appnet/events.hpp"

#include <array>
#include <utility>

namespace appnet {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 7> kKindTokens{{
    {EventKind::send, "send"},
    {EventKind::receive, "receive"},
    {EventKind::fg_enter, "fg_enter"},
    {EventKind::fg_exit, "fg_exit"},
    {EventKind::active, "active"},
    {EventKind::inactive, "inactive"},
    {EventKind::net_state_change, "net_state_change"},
}};

constexpr std::array<std::pair<NetState, std::string_view>, 3> kStateTokens{{
    {NetState::cellular, "cellular"},
    {NetState::wifi, "wifi"},
    {NetState::none, "none"},
}};

}  // namespace

std::string_view to_token(EventKind kind) {
    for (const auto& [k, token] : kKindTokens)
        if (k == kind) return token;
    return "?";
}

std::string_view to_token(NetState state) {
    for (const auto& [s, token] : kStateTokens)
        if (s == state) return token;
    return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view token) {
    for (const auto& [k, t] : kKindTokens)
        if (t == token) return k;
    return std::nullopt;
}

std::optional<NetState> parse_net_state(std::string_view token) {
    for (const auto& [s, t] : kStateTokens)
        if (t == token) return s;
    return std::nullopt;
}

}  // namespace appnet
