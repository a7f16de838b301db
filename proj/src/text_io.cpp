#include "text_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace appnet::detail {

std::string format_double(double v) {
    // fmt's default presentation is the shortest round-trip representation.
    return fmt::format("{}", v);
}

double parse_double(const std::string& token, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw DataError("expected a number, got '" + token + "'", line);
    }
    if (used != token.size()) throw DataError("expected a number, got '" + token + "'", line);
    return v;
}

long long parse_int(const std::string& token, std::size_t line) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw DataError("expected an integer, got '" + token + "'", line);
    return v;
}

std::size_t parse_index(const std::string& token, std::size_t line) {
    const long long v = parse_int(token, line);
    if (v < 0) throw DataError("expected a non-negative integer, got '" + token + "'", line);
    return static_cast<std::size_t>(v);
}

std::vector<std::string> LineReader::next() {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        std::istringstream ss(text);
        std::vector<std::string> tokens;
        for (std::string t; ss >> t;) tokens.push_back(t);
        if (!tokens.empty()) return tokens;
    }
    throw DataError("unexpected end of input", line_);
}

std::vector<std::string> LineReader::expect(const std::string& keyword, int args) {
    auto tokens = next();
    if (tokens.front() != keyword) fail("expected '" + keyword + "', got '" + tokens.front() + "'");
    if (args >= 0 && tokens.size() != static_cast<std::size_t>(args) + 1)
        fail("'" + keyword + "' expects " + std::to_string(args) + " values");
    return tokens;
}

}  // namespace appnet::detail
