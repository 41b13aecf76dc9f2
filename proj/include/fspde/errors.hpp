#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace fspde {

// Short %g rendering for messages.
inline std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Exit codes of the command-line tool; each error category maps onto one.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    numerical_refusal = 3,
    hypothesis_violation = 4,
    blow_up = 5,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::usage; }
};

// Malformed fractal description or inconsistent harmonic structure.
class InvalidSpecError : public Error {
public:
    using Error::Error;
};

// A point address that cannot be resolved at the requested level.
class AddressError : public Error {
public:
    using Error::Error;
};

// Requested size exceeds the configured memory budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of the operation (t <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// The computation would be under-resolved or did not converge.
class NumericalRefusal : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::numerical_refusal; }
};

class HypothesisViolation : public Error {
public:
    HypothesisViolation(std::string hypothesis, const std::string& what)
        : Error("Hypothesis " + hypothesis + ": " + what), hypothesis_(std::move(hypothesis)) {}
    const std::string& hypothesis() const noexcept { return hypothesis_; }
    ExitCode exit_code() const noexcept override { return ExitCode::hypothesis_violation; }

private:
    std::string hypothesis_;
};

class BlowUpError : public Error {
public:
    BlowUpError(std::size_t path, std::size_t step, double time)
        : Error("non-finite state on path " + std::to_string(path) + " at step " +
                std::to_string(step) + " (t = " + short_num(time) + ")"),
          path_(path), step_(step), time_(time) {}
    std::size_t path() const noexcept { return path_; }
    std::size_t step() const noexcept { return step_; }
    double time() const noexcept { return time_; }
    ExitCode exit_code() const noexcept override { return ExitCode::blow_up; }

private:
    std::size_t path_;
    std::size_t step_;
    double time_;
};

}  // namespace fspde
