#pragma once

#include <stdexcept>
#include <string>

namespace bcr {

// Base class for all library errors so callers (and the C wrapper) can catch
// everything the library throws with one handler.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller passed an argument violating a documented precondition.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// Every mode assigned zero likelihood to an observed symbol: the posterior is
// undefined and continuing would silently fabricate beliefs, so this is fatal.
struct ModelClassExhausted : Error {
    explicit ModelClassExhausted(const std::string& what) : Error(what) {}
};

// Malformed ASCII map; line/col are 1-based positions of the offending glyph
// (0 when the error is not tied to one position, e.g. "no goal cell").
struct MapParseError : Error {
    MapParseError(const std::string& what, int line_, int col_)
        : Error(what), line(line_), col(col_) {}
    int line = 0;
    int col = 0;
};

// Experiment configuration rejected during validation.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Filesystem problem (cache files, CSV/SVG outputs).
struct IoError : Error {
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace bcr
