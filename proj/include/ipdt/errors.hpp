#pragma once

#include <stdexcept>
#include <string>

namespace ipdt {

/// Bad configuration or bad input data. Carries the config path (or file)
/// that failed so CLI messages can point at the offending key.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg, std::string path = {})
        : std::runtime_error(path.empty() ? msg : path + ": " + msg),
          path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A step test whose response never reaches a quasi-linear ramp phase.
class NotIntegratingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-finite state or derivative encountered during simulation.
/// Carries the simulation time at which the fault occurred.
class NumericFault : public std::runtime_error {
public:
    NumericFault(const std::string& msg, double t)
        : std::runtime_error(msg + " (t=" + std::to_string(t) + " s)"), t_(t) {}

    double time() const noexcept { return t_; }

private:
    double t_;
};

/// Plant state left the region where the model is meaningful.
class ModelValidityError : public NumericFault {
public:
    using NumericFault::NumericFault;
};

/// API misuse (e.g. non-monotone sample times). Programming error, not data.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace ipdt
