#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oblivious {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidEnvironment : public Error {
public:
    using Error::Error;
};

class ActionNotApplicable : public Error {
public:
    using Error::Error;
};

class EpisodeClosed : public Error {
public:
    EpisodeClosed() : Error("planning episode is closed") {}
};

class InvalidFact : public Error {
public:
    using Error::Error;
};

class NoActions : public Error {
public:
    using Error::Error;
};

class NotDeceptive : public Error {
public:
    using Error::Error;
};

class BoundsExceeded : public Error {
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class TooFewAgents : public Error {
public:
    TooFewAgents() : Error("divergence needs at least two intention profiles") {}
};

/// Malformed scenario document. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Well-formed document whose content violates one or more invariants.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "scenario validation failed:";
        for (const auto& i : issues) out += "\n  - " + i;
        return out;
    }
    std::vector<std::string> issues_;
};

}  // namespace oblivious
