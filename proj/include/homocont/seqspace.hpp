#pragma once

// Finite windows onto two-sided null sequences: the storage type every other
// module passes around, plus the sup-norm, the shift and decay-envelope checks.

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <stdexcept>

namespace homocont {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Max-norm on R^d. This is the fixed norm used everywhere in the library.
[[nodiscard]] double vec_norm(const Vector& x);

/// Operator norm induced by the max-norm (maximal absolute row sum).
[[nodiscard]] double op_norm(const Matrix& a);

/// Inclusive integer interval [t_minus, t_plus] with at least three points.
class Window {
public:
    Window(int t_minus, int t_plus);

    [[nodiscard]] int t_minus() const noexcept { return t_minus_; }
    [[nodiscard]] int t_plus() const noexcept { return t_plus_; }
    [[nodiscard]] int length() const noexcept { return t_plus_ - t_minus_ + 1; }
    [[nodiscard]] bool contains(int t) const noexcept { return t >= t_minus_ && t <= t_plus_; }
    [[nodiscard]] int index(int t) const noexcept { return t - t_minus_; }

    /// Symmetric window [-half, half].
    [[nodiscard]] static Window symmetric(int half) { return {-half, half}; }

    /// Extends both ends so the length grows by roughly `factor`.
    [[nodiscard]] Window grown(double factor) const;

    bool operator==(const Window&) const = default;

private:
    int t_minus_;
    int t_plus_;
};

/// A block of d-vectors on a window. Values outside the window are zero.
class TruncatedSequence {
public:
    TruncatedSequence(Window window, int dim);
    /// `values` is d x window.length(), one column per time index.
    TruncatedSequence(Window window, Matrix values);

    [[nodiscard]] static TruncatedSequence zeros(Window window, int dim) { return {window, dim}; }

    [[nodiscard]] const Window& window() const noexcept { return window_; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.rows()); }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }

    /// Value at time t; the zero vector outside the window.
    [[nodiscard]] Vector at(int t) const;
    void set(int t, const Vector& x);

    /// Column-stacked copy (d * length entries, time-major).
    [[nodiscard]] Vector flat() const;
    [[nodiscard]] static TruncatedSequence from_flat(Window window, int dim, const Vector& flat);

    /// Same sequence viewed on another window (zero extension / truncation).
    [[nodiscard]] TruncatedSequence restricted_to(Window other) const;

private:
    Window window_;
    Matrix values_;
};

/// Geometric envelope |phi_t| <= constant * rate^|t|.
struct DecayEnvelope {
    double constant = 1.0;
    double rate = 0.5;

    DecayEnvelope(double c, double r);
};

struct EnvelopeCheck {
    bool holds = true;
    /// Time index of the violation closest to t = 0 (negative side wins ties).
    std::optional<int> first_violation;
};

[[nodiscard]] double sup_norm(const TruncatedSequence& phi);

/// psi_t = phi_{t+l}, living on [t_minus - l, t_plus - l].
[[nodiscard]] TruncatedSequence shift(const TruncatedSequence& phi, int l);

[[nodiscard]] EnvelopeCheck check_envelope(const TruncatedSequence& phi, const DecayEnvelope& env);

/// CSV with header `t,x1,...,xd`, rows in increasing t.
void write_csv(std::ostream& out, const TruncatedSequence& phi);
[[nodiscard]] TruncatedSequence read_csv(std::istream& in);

}  // namespace homocont
