#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "appnet/profiles.hpp"
#include "appnet/simulator.hpp"

using namespace appnet;

namespace {

AppProfile quiet(const std::string& id = "app") {
    AppProfile p;
    p.app_id = id;
    p.sent_bytes_log_mean = 6.0;
    p.recv_bytes_log_mean = 7.0;
    p.fg_fraction = 0.0;
    return p;
}

std::size_t count_kind(const std::vector<NetworkEvent>& evs, EventKind k) {
    return std::count_if(evs.begin(), evs.end(), [&](const auto& e) { return e.kind == k; });
}

}  // namespace

TEST_CASE("zero rates produce no transfers") {
    const auto evs = simulate_trace(quiet(), 3600, 7);
    CHECK(count_kind(evs, EventKind::send) == 0);
    CHECK(count_kind(evs, EventKind::receive) == 0);
    CHECK_FALSE(evs.empty());  // initial state events
}

TEST_CASE("send count tracks the configured rate") {
    auto p = quiet();
    p.send_event_rate = 0.1;
    double total = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) total += double(count_kind(simulate_trace(p, 10000, seed), EventKind::send));
    const double mean = total / 50.0;
    CHECK(mean > 900.0);
    CHECK(mean < 1100.0);
}

TEST_CASE("periodic sync lands on multiples of its interval") {
    auto p = quiet();
    p.periodic_sync_interval_secs = 60;
    p.periodic_sync_bytes = 256;
    const auto evs = simulate_trace(p, 300, 3);
    std::vector<std::int64_t> times;
    for (const auto& e : evs)
        if (e.kind == EventKind::send) {
            times.push_back(e.timestamp);
            CHECK(e.bytes == 256);
        }
    CHECK(times == std::vector<std::int64_t>{60, 120, 180, 240, 300});
}

TEST_CASE("beacon fires every interval") {
    auto p = quiet();
    p.beacon = BeaconSpec{30, 512, 0, true};
    const auto evs = simulate_trace(p, 300, 11);
    CHECK(count_kind(evs, EventKind::send) == 10);
    CHECK(count_kind(evs, EventKind::receive) == 0);
    for (const auto& e : evs)
        if (e.kind == EventKind::send) CHECK(e.bytes == 512);
}

TEST_CASE("foreground-only beacon stays silent in background") {
    auto p = quiet();
    p.beacon = BeaconSpec{30, 512, 100, false};
    CHECK(count_kind(simulate_trace(p, 600, 1), EventKind::send) == 0);
    p.fg_fraction = 1.0;
    const auto evs = simulate_trace(p, 600, 1);
    CHECK(count_kind(evs, EventKind::send) == 20);
    CHECK(count_kind(evs, EventKind::receive) == 20);
}

TEST_CASE("same seed gives the same trace") {
    const auto& p = builtin_library().profile("facebook");
    CHECK(simulate_trace(p, 1800, 42) == simulate_trace(p, 1800, 42));
    CHECK_FALSE(simulate_trace(p, 1800, 42) == simulate_trace(p, 1800, 43));
}

TEST_CASE("events are time ordered and within the duration") {
    for (const auto& name : builtin_profile_names()) {
        const auto evs = simulate_trace(builtin_library().profile(name), 1200, 5);
        CHECK(std::is_sorted(evs.begin(), evs.end(),
                             [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
        CHECK(evs.back().timestamp <= 1200);
        for (const auto& e : evs) {
            CHECK(e.app_id == name);
            if (is_transfer(e.kind)) CHECK(e.bytes > 0);
        }
    }
}

TEST_CASE("perturbation identity and composition") {
    const auto& base = builtin_library().profile("gmail");
    PerturbationSpec unit;
    unit.factors = {{"send_event_rate", 1.0}, {"recv_bytes_log_mean", 1.0}};
    CHECK(perturb_profile(base, unit) == base);

    PerturbationSpec a, b, ab;
    a.factors = {{"send_event_rate", 2.0}};
    b.factors = {{"send_event_rate", 1.5}, {"fg_fraction", 0.5}};
    ab.factors = {{"send_event_rate", 3.0}, {"fg_fraction", 0.5}};
    const auto twice = perturb_profile(perturb_profile(base, a), b);
    const auto once = perturb_profile(base, ab);
    CHECK(twice.send_event_rate == doctest::Approx(once.send_event_rate));
    CHECK(twice.fg_fraction == doctest::Approx(once.fg_fraction));

    const auto& v2 = builtin_library().perturbation("gmail_v2");
    const auto zero = with_intensity(v2, 0.0);
    CHECK(perturb_profile(base, zero) == base);
    const auto one = perturb_profile(base, with_intensity(v2, 1.0));
    CHECK(one == perturb_profile(base, v2));
    const auto two = perturb_profile(base, with_intensity(v2, 2.0));
    CHECK(two.send_event_rate == doctest::Approx(perturb_profile(one, v2).send_event_rate));
}

TEST_CASE("beacon injection keeps the base behaviour") {
    const auto& base = builtin_library().profile("snake");
    const auto trojan = perturb_profile(base, builtin_library().perturbation("snake_trojan"));
    REQUIRE(trojan.beacon);
    auto stripped = trojan;
    stripped.beacon.reset();
    CHECK(stripped == base);
}

TEST_CASE("invalid profiles and perturbations are rejected") {
    auto p = quiet();
    p.send_event_rate = -0.1;
    CHECK_THROWS_AS(simulate_trace(p, 100, 1), std::invalid_argument);
    p = quiet();
    p.fg_fraction = 1.5;
    CHECK_THROWS_AS(validate_profile(p), std::invalid_argument);
    CHECK_THROWS_AS(simulate_trace(quiet(), 0, 1), std::invalid_argument);

    PerturbationSpec bad;
    bad.factors = {{"no_such_field", 2.0}};
    CHECK_THROWS_AS(perturb_profile(quiet(), bad), std::invalid_argument);
    bad.factors = {{"send_event_rate", -1.0}};
    CHECK_THROWS_AS(perturb_profile(quiet(), bad), std::invalid_argument);
    PerturbationSpec beacon;
    beacon.kind = PerturbationKind::beacon_injection;
    CHECK_THROWS_AS(perturb_profile(quiet(), beacon), std::invalid_argument);
    beacon.beacon = BeaconSpec{0, 10, 0, true};
    CHECK_THROWS_AS(perturb_profile(quiet(), beacon), std::invalid_argument);
    CHECK_THROWS_AS(with_intensity(beacon, 1.0), std::invalid_argument);
}
