#pragma once

// Whitespace-tokenised line reading for the text model formats.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "appnet/error.hpp"

namespace appnet::detail {

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

double parse_double(const std::string& token, std::size_t line);
long long parse_int(const std::string& token, std::size_t line);
std::size_t parse_index(const std::string& token, std::size_t line);

class LineReader {
public:
    LineReader(std::istream& in, std::size_t& line) : in_(in), line_(line) {}

    /// Next non-blank line split on whitespace; throws DataError at end of input.
    std::vector<std::string> next();

    /// Next line, which must start with `keyword` and have exactly `args` further tokens
    /// (any number when args < 0).
    std::vector<std::string> expect(const std::string& keyword, int args = -1);

    std::size_t line() const { return line_; }

    [[noreturn]] void fail(const std::string& what) const { throw DataError(what, line_); }

private:
    std::istream& in_;
    std::size_t& line_;
};

}  // namespace appnet::detail
