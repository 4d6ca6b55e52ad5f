#pragma once

#include <stdexcept>
#include <string>

namespace bess {

// Base for every error raised by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a domain invariant (duplicates, gaps, ranges).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Precondition failure on an operation argument.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Argument outside a function's mathematical domain (log of a nonpositive value).
class DomainError : public Error {
public:
    using Error::Error;
};

// Iterative estimation that stopped before meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double objective, double spread)
        : Error(what), iterations_(iterations), objective_(objective), spread_(spread) {}
    int iterations() const { return iterations_; }
    double objective() const { return objective_; }
    double spread() const { return spread_; }

private:
    int iterations_;
    double objective_;
    double spread_;
};

// Optimization problem without a feasible solution. `constraint` names the
// constraint class that cannot be satisfied.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& constraint, const std::string& what)
        : Error(what), constraint_(constraint) {}
    const std::string& constraint() const { return constraint_; }

private:
    std::string constraint_;
};

}  // namespace bess
