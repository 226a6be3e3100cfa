#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncmech {

/// Input that violates a domain invariant. `field()` names the offending
/// field, e.g. "algebra.tau" or "particles[1].mass".
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The COM brackets of a system do not close into the single-particle form
/// unless the noncommutativity parameters scale with mass.
class ScalingRequired : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Singularity or non-finite value met while evaluating or integrating.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& message, std::size_t step = 0)
        : std::runtime_error(message), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace ncmech
