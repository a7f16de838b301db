#include "appnet/io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "appnet/error.hpp"
#include "text_io.hpp"

namespace appnet {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Reads "# <magic> <version>" and checks the version.
void read_version_line(std::istream& in, std::size_t& line, const std::string& magic, int version) {
    std::string text;
    if (!std::getline(in, text)) throw DataError("empty input, expected '# " + magic + "' header", 1);
    ++line;
    strip_cr(text);
    std::istringstream ss(text);
    std::string hash, word, v;
    ss >> hash >> word >> v;
    if (hash != "#" || word != magic) throw DataError("missing '# " + magic + " <version>' header", line);
    if (v != std::to_string(version)) throw DataError("unsupported " + magic + " version '" + v + "'", line);
}

std::string cell_text(Feature f, double value) {
    const auto& info = feature_info(f);
    if (info.kind == FeatureKind::categorical) return std::string(info.categories.at(static_cast<std::size_t>(value)));
    return detail::format_double(value);
}

double parse_cell(Feature f, const std::string& text, std::size_t line) {
    const auto& info = feature_info(f);
    if (info.kind == FeatureKind::numeric) return detail::parse_double(text, line);
    for (std::size_t c = 0; c < info.categories.size(); ++c)
        if (info.categories[c] == text) return static_cast<double>(c);
    throw DataError("invalid value '" + text + "' for categorical feature " + std::string(info.name), line);
}

}  // namespace

void write_trace(std::ostream& out, std::span<const NetworkEvent> events) {
    out << "# appnet-trace " << kTraceFormatVersion << '\n';
    for (const auto& e : events) {
        out << e.timestamp << '\t' << e.app_id << '\t' << to_token(e.kind) << '\t' << e.bytes << '\t'
            << (e.kind == EventKind::net_state_change ? to_token(e.net_state) : "-") << '\n';
    }
}

std::vector<NetworkEvent> read_trace(std::istream& in) {
    std::size_t line = 0;
    read_version_line(in, line, "appnet-trace", kTraceFormatVersion);
    std::vector<NetworkEvent> events;
    std::string text;
    while (std::getline(in, text)) {
        ++line;
        strip_cr(text);
        if (text.empty() || text.front() == '#') continue;
        const auto f = split(text, '\t');
        if (f.size() != 5) throw DataError("expected 5 tab-separated fields, got " + std::to_string(f.size()), line);
        NetworkEvent e;
        e.timestamp = detail::parse_int(f[0], line);
        if (e.timestamp < 0) throw DataError("negative timestamp", line);
        if (f[1].empty()) throw DataError("empty app id", line);
        e.app_id = f[1];
        auto kind = parse_event_kind(f[2]);
        if (!kind) throw DataError("unknown event kind '" + f[2] + "'", line);
        e.kind = *kind;
        const long long bytes = detail::parse_int(f[3], line);
        if (bytes < 0) throw DataError("negative byte count", line);
        e.bytes = static_cast<std::uint64_t>(bytes);
        if (!is_transfer(e.kind) && e.bytes != 0) throw DataError("non-transfer event carries bytes", line);
        if (e.kind == EventKind::net_state_change) {
            auto ns = parse_net_state(f[4]);
            if (!ns) throw DataError("unknown network state '" + f[4] + "'", line);
            e.net_state = *ns;
        } else if (f[4] != "-") {
            throw DataError("network state given on a non state-change event", line);
        }
        if (!events.empty() && e.timestamp < events.back().timestamp)
            throw DataError("timestamps must be non-decreasing", line);
        events.push_back(std::move(e));
    }
    return events;
}

void write_vectors_csv(std::ostream& out, std::span<const AggregatedVector> vectors) {
    out << "# appnet-vectors " << kVectorFormatVersion << '\n';
    out << "window_end_ts,app_id";
    for (std::size_t i = 0; i < kFeatureCount; ++i) out << ',' << feature_info(static_cast<Feature>(i)).name;
    out << ",label\n";
    for (const auto& v : vectors) {
        out << v.window_end_ts << ',' << v.app_id;
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            out << ',' << cell_text(static_cast<Feature>(i), v.values[i]);
        out << ',' << (v.label ? (*v.label == Label::normal ? "normal" : "anomalous") : "") << '\n';
    }
}

std::vector<AggregatedVector> read_vectors_csv(std::istream& in) {
    std::size_t line = 0;
    read_version_line(in, line, "appnet-vectors", kVectorFormatVersion);
    std::string text;
    if (!std::getline(in, text)) throw DataError("missing CSV header row", line + 1);
    ++line;
    strip_cr(text);
    const auto header = split(text, ',');
    if (header.size() != kFeatureCount + 3 || header.front() != "window_end_ts" || header[1] != "app_id" ||
        header.back() != "label")
        throw DataError("unexpected CSV header", line);
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (header[i + 2] != feature_info(static_cast<Feature>(i)).name)
            throw DataError("unexpected column '" + header[i + 2] + "'", line);

    std::vector<AggregatedVector> out;
    while (std::getline(in, text)) {
        ++line;
        strip_cr(text);
        if (text.empty()) continue;
        const auto f = split(text, ',');
        if (f.size() != header.size())
            throw DataError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                            line);
        AggregatedVector v;
        v.window_end_ts = detail::parse_int(f[0], line);
        v.app_id = f[1];
        for (std::size_t i = 0; i < kFeatureCount; ++i) v.values[i] = parse_cell(static_cast<Feature>(i), f[i + 2], line);
        const auto& label = f.back();
        if (label == "normal")
            v.label = Label::normal;
        else if (label == "anomalous")
            v.label = Label::anomalous;
        else if (!label.empty())
            throw DataError("invalid label '" + label + "'", line);
        out.push_back(std::move(v));
    }
    return out;
}

void write_samples_csv(std::ostream& out, std::span<const NetworkSample> samples) {
    out << "# appnet-samples " << kSampleFormatVersion << '\n';
    out << "window_end_ts,app_id,sent_bytes,recv_bytes,sent_pct,recv_pct,net_state,secs_since_last_send,"
           "secs_since_last_recv,send_mode,recv_mode,fg_state,active_state,fg_time_total_secs,"
           "bg_time_total_secs,mins_since_last_active,days_since_modified,send_events,recv_events\n";
    auto mode = [](TransferMode m) { return m == TransferMode::continuous ? "continuous" : "eventual"; };
    for (const auto& s : samples) {
        out << s.window_end_ts << ',' << s.app_id << ',' << s.sent_bytes << ',' << s.recv_bytes << ','
            << detail::format_double(s.sent_pct) << ',' << detail::format_double(s.recv_pct) << ','
            << to_token(s.net_state) << ',' << detail::format_double(s.secs_since_last_send) << ','
            << detail::format_double(s.secs_since_last_recv) << ',' << mode(s.send_mode) << ','
            << mode(s.recv_mode) << ',' << (s.fg_state ? "foreground" : "background") << ','
            << (s.active_state ? "active" : "nonactive") << ',' << detail::format_double(s.fg_time_total_secs)
            << ',' << detail::format_double(s.bg_time_total_secs) << ','
            << detail::format_double(s.mins_since_last_active) << ','
            << detail::format_double(s.days_since_modified) << ',' << s.send_times.size() << ','
            << s.recv_times.size() << '\n';
    }
}

void write_verdict_header(std::ostream& out) {
    out << "# appnet-verdicts " << kVerdictFormatVersion << '\n';
}

void write_verdict_line(std::ostream& out, const Verdict& verdict) {
    out << verdict.window_end_ts << '\t' << verdict.app_id << '\t' << detail::format_double(verdict.log_probability)
        << '\t' << (verdict.is_anomalous ? "anomalous" : "normal") << '\n';
}

}  // namespace appnet
