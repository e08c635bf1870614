#pragma once

#include <stdexcept>
#include <string>

namespace aapi {

/// Shape mismatch, out-of-range index, non-finite input.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A chain that should be irreducible and aperiodic is not (or numerically
/// indistinguishable from one that is not).
class ErgodicityViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic-policy enumeration would exceed its cap.
class TooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Normal equations are singular; raise the ridge.
class DegenerateFit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Posterior precision is not positive definite; raise the prior precision.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An agent was asked to improve more often than its configured phase count.
class PhaseOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Feature covariance under the given weighting has no positive lower eigenvalue.
class ExcitationViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace aapi
