#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace appnet {

/// Raised when an input file or data set is malformed. Carries the 1-based
/// line number when the problem can be pinned to a line (0 otherwise).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace appnet
