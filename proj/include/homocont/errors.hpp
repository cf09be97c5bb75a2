#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homocont {

/// Base for failures of the numerics (as opposed to bad arguments, which are
/// reported with std::invalid_argument).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterate left the domain box Omega.
class DomainViolation : public NumericalError {
public:
    DomainViolation(int t, const std::string& what)
        : NumericalError(what), t_(t) {}
    [[nodiscard]] int time_index() const noexcept { return t_; }

private:
    int t_;
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, std::vector<double> history)
        : NumericalError(what), history_(std::move(history)) {}
    [[nodiscard]] const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// The Newton matrix is rank deficient, i.e. the linearization is not hyperbolic.
class SingularLinearization : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace homocont
