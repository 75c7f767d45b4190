#ifndef SFW_ERRORS_HPP
#define SFW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sfw {

/// Base class for all library errors. `stage()` names the pipeline step that failed
/// so callers (the CLI in particular) can report where a design broke down.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, std::string stage = {})
        : std::runtime_error(what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Input data violates a feasibility condition (integrability, positivity, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A Toeplitz matrix that must be positive definite is not.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Realized FIR puts too much energy at negative times.
class LeakageTooHigh : public Error {
public:
    using Error::Error;
};

/// Numerical failure that is neither a validation nor a definiteness problem.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace sfw

#endif // SFW_ERRORS_HPP
