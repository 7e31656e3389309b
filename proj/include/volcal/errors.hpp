#pragma once

#include <stdexcept>
#include <string>

namespace volcal {

/// Base of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (K <= 0, sigma <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input that fails validation (inconsistent shapes, bad config, malformed files).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Root finder could not bracket a solution; carries the admissible price range.
class NoSolutionError : public Error {
public:
    NoSolutionError(const std::string& what, double lower, double upper)
        : Error(what), lower_bound(lower), upper_bound(upper) {}
    double lower_bound;
    double upper_bound;
};

/// Iterative procedure hit its cap without meeting tolerance.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : Error(what), residual(last_residual) {}
    double residual;
};

/// Reference quadrature failed to converge within its refinement cap.
class OracleFailure : public Error {
public:
    using Error::Error;
};

/// File parse failure; line is 1-based, 0 when not tied to a line.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line_no)
        : ValidationError(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
    std::size_t line;
};

}  // namespace volcal
