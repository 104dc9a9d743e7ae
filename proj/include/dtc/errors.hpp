// errors.hpp: exception hierarchy. Each category maps onto a CLI exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace dtc {

/// Invalid physical input: singular capacitance matrix, E12 too large, bad labels.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not converge or produced an inconsistent result.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Configuration file or override could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The inputs are valid but a precondition of the requested analysis does not hold
/// (no sign change of the coupling, resonance outside a scan window, ...).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dtc
