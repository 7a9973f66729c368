#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ftls {

/// Raised when the asymptotic data admit no stationary profile. This is a
/// mathematical verdict, not a numerical failure.
class NoProfileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// V^- f(rho^-) and V^+ f(rho^+) disagree, so no profile can connect them.
class IncompatibleAsymptotesError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AnchorOutOfRangeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerics (blow-up, NaN, non-convergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BlowUpError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, std::vector<double> history)
        : NumericalError(what), residual_history(std::move(history)) {}

    std::vector<double> residual_history;
};

}  // namespace ftls
