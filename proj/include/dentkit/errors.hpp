#pragma once

#include <stdexcept>
#include <string>

namespace dentkit {

// Base class for all toolkit failures so callers can catch one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error("parse error: " + msg) {}
};

class IOError : public Error {
public:
    explicit IOError(const std::string& msg) : Error("i/o error: " + msg) {}
};

class LabelMismatch : public Error {
public:
    explicit LabelMismatch(const std::string& msg) : Error("label mismatch: " + msg) {}
};

class DegenerateMesh : public Error {
public:
    explicit DegenerateMesh(const std::string& msg) : Error("degenerate mesh: " + msg) {}
};

class TargetUnreachable : public Error {
public:
    explicit TargetUnreachable(const std::string& msg) : Error("target unreachable: " + msg) {}
};

class MissingLabels : public Error {
public:
    explicit MissingLabels(const std::string& msg) : Error("missing labels: " + msg) {}
};

class TooFewBoundaryPoints : public Error {
public:
    explicit TooFewBoundaryPoints(const std::string& msg) : Error("too few boundary points: " + msg) {}
};

class LengthMismatch : public Error {
public:
    explicit LengthMismatch(const std::string& msg) : Error("length mismatch: " + msg) {}
};

class InvalidClass : public Error {
public:
    explicit InvalidClass(const std::string& msg) : Error("invalid class: " + msg) {}
};

class InvalidGrid : public Error {
public:
    explicit InvalidGrid(const std::string& msg) : Error("invalid grid: " + msg) {}
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};

class FrameMismatch : public Error {
public:
    explicit FrameMismatch(const std::string& msg) : Error("frame mismatch: " + msg) {}
};

class NoVisiblePoints : public Error {
public:
    explicit NoVisiblePoints(const std::string& msg) : Error("no visible points: " + msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

}  // namespace dentkit
