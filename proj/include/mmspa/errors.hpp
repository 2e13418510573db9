#pragma once

#include <stdexcept>
#include <string>

namespace mmspa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Root bracket whose endpoints do not straddle zero.
class NoSignChange : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity showed up where a finite value was required.
class NonFinite : public Error {
public:
    using Error::Error;
};

/// Adaptive refinement ran out of budget before reaching the tolerance.
class ToleranceNotMet : public Error {
public:
    using Error::Error;
};

class SamplingBudgetExhausted : public Error {
public:
    using Error::Error;
};

/// Raised by saddle verification; carries a description of the offending probe.
class SaddleViolation : public Error {
public:
    SaddleViolation(const std::string& probe, double gap)
        : Error("saddle violation at probe '" + probe + "' (gap " + std::to_string(gap) + ")"),
          probe_(probe), gap_(gap) {}

    const std::string& probe() const noexcept { return probe_; }
    double gap() const noexcept { return gap_; }

private:
    std::string probe_;
    double gap_;
};

} // namespace mmspa
