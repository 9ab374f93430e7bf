#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsentinel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedLine : public Error {
public:
    MalformedLine(std::string line, const std::string& why)
        : Error("malformed g-code line '" + line + "': " + why), line_(std::move(line)) {}

    const std::string& line() const noexcept { return line_; }

private:
    std::string line_;
};

class MalformedFile : public Error {
public:
    MalformedFile(std::size_t line_index, const std::string& cause)
        : Error("malformed g-code file at line " + std::to_string(line_index) + ": " + cause),
          line_index_(line_index) {}

    std::size_t line_index() const noexcept { return line_index_; }

private:
    std::size_t line_index_;
};

class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

class NoLayers : public Error {
public:
    NoLayers() : Error("document has no layer markers") {}
};

class EmptyRange : public Error {
public:
    using Error::Error;
};

class CountsExceedDataset : public Error {
public:
    using Error::Error;
};

class TooFewRows : public Error {
public:
    TooFewRows(std::size_t have, std::size_t need)
        : Error("need at least " + std::to_string(need) + " rows, have " + std::to_string(have)) {}
};

class ZeroBandwidth : public Error {
public:
    ZeroBandwidth() : Error("mean shift bandwidth is zero (all points identical)") {}
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class UnknownPath : public Error {
public:
    explicit UnknownPath(const std::string& path) : Error("path not in manifest: " + path) {}
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace gsentinel
