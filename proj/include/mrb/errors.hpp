#pragma once

#include <stdexcept>
#include <string>

namespace mrb {

/// Mismatched vector lengths between connection vectors, voltages, indices.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (m outside [0,1], ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Ratings requested at a duty where the diode-bridge current diverges.
class UnboundedCurrentError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Configuration that fails validation. `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Time-domain solver produced a non-finite or runaway state.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(std::string variable, double t)
        : std::runtime_error("unstable state variable '" + variable + "' at t=" + std::to_string(t)),
          variable_(std::move(variable)), t_(t) {}

    [[nodiscard]] const std::string& variable() const noexcept { return variable_; }
    [[nodiscard]] double time() const noexcept { return t_; }

private:
    std::string variable_;
    double t_;
};

/// A controller reference that no modulation index can reach.
class UnreachableSetpointError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace mrb
