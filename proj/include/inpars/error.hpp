#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inpars {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input line. Carries the 1-based line number and the offending content.
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& content, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what + ": '" + abbreviate(content) + "'"),
          line_(line),
          content_(content) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& content() const noexcept { return content_; }

private:
    static std::string abbreviate(const std::string& s) {
        return s.size() <= 200 ? s : s.substr(0, 200) + "...";
    }

    std::size_t line_;
    std::string content_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace inpars
