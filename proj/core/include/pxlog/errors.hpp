#pragma once

#include <stdexcept>
#include <string>

namespace pxlog {

// Error taxonomy maps 1:1 onto CLI exit codes:
// ValidationError -> 2, StatError -> 3, IoError -> 4.

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class StatError : public std::runtime_error {
public:
    explicit StatError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pxlog
