#pragma once

#include <stdexcept>
#include <string>

namespace swis {

/// Malformed input file (manifest schema, cost table, schedule file).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A value or byte range outside its declared bounds.
class RangeError : public std::runtime_error {
public:
    explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad magic bytes or unsupported format version in a quantized-model file.
class VersionError : public std::runtime_error {
public:
    explicit VersionError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace swis
