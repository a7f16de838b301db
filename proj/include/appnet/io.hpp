#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "appnet/cross_feature.hpp"
#include "appnet/events.hpp"
#include "appnet/features.hpp"

namespace appnet {

inline constexpr int kTraceFormatVersion = 1;
inline constexpr int kVectorFormatVersion = 1;
inline constexpr int kSampleFormatVersion = 1;
inline constexpr int kVerdictFormatVersion = 1;

/// `# appnet-trace <v>` followed by one event per line:
/// `timestamp<TAB>app_id<TAB>kind<TAB>bytes<TAB>net_state` ("-" when not a state change).
void write_trace(std::ostream& out, std::span<const NetworkEvent> events);
/// Throws DataError with the offending line number.
std::vector<NetworkEvent> read_trace(std::istream& in);

/// `# appnet-vectors <v>`, a header row, then one CSV row per vector with
/// categorical values as tokens and sentinels as -1.
void write_vectors_csv(std::ostream& out, std::span<const AggregatedVector> vectors);
std::vector<AggregatedVector> read_vectors_csv(std::istream& in);

void write_samples_csv(std::ostream& out, std::span<const NetworkSample> samples);

/// `window_end_ts<TAB>app_id<TAB>log_probability<TAB>verdict` after a version comment.
void write_verdict_header(std::ostream& out);
void write_verdict_line(std::ostream& out, const Verdict& verdict);

}  // namespace appnet
