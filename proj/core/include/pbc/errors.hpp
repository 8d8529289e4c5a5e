#pragma once

#include <stdexcept>
#include <string>

namespace pbc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes do not agree with the system dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A model, gain matrix or map violates a structural requirement
/// (symmetry, definiteness, skew-symmetry, bound ordering).
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be inverted (or pseudo-inverted) is rank deficient.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A requested operating point does not exist (negative discriminant,
/// residual above tolerance, equilibrium control outside the input set).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// An iterative solve did not reach its tolerance within the iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Simulation aborted because the state left the admissible range.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double time) : Error(what), time_(time) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        if (line <= 0) return what;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
    }

    int line_;
    int column_;
};

}  // namespace pbc
