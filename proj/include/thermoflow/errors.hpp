#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace thermoflow {

// Base of every error the library throws. The message can be extended with
// context (step index, time, file path) as the error propagates outward.
class Error : public std::exception {
public:
    explicit Error(std::string message) : message_(std::move(message)) {}

    const char* what() const noexcept override { return message_.c_str(); }

    void add_context(const std::string& context) { message_ += " (" + context + ")"; }

private:
    std::string message_;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Iterative solve did not reach the requested tolerance.
class SolverFailure : public Error {
public:
    SolverFailure(std::string message, double residual, long iterations)
        : Error(std::move(message)), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

// Temperature left the positive cone.
class PositivityViolation : public Error {
public:
    PositivityViolation(std::string message, long point) : Error(std::move(message)), point_(point) {}

    long point() const noexcept { return point_; }

private:
    long point_;
};

class TimeStepTooLarge : public Error {
public:
    using Error::Error;
};

class Divergence : public Error {
public:
    using Error::Error;
};

// Functional evaluated outside its domain (log of a non-positive value, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

class CorruptSnapshot : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace thermoflow
