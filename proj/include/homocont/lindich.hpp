#pragma once

// Linear nonautonomous difference equations x_{t+1} = A_t x_t: evolution
// operators, exponential dichotomies with their invariant projectors,
// dichotomy spectra and the Fredholm index of the operator
// (L_A phi)_t = phi_t - A_{t-1} phi_{t-1}.

#include "homocont/errors.hpp"
#include "homocont/seqspace.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace homocont {

enum class Interval { Z, ZPlus, ZMinus };

[[nodiscard]] std::string to_string(Interval iv);
/// Accepts "Z", "Z+", "Z-" (also "Zplus"/"Zminus").
[[nodiscard]] Interval parse_interval(const std::string& s);

/// One period A_0, ..., A_{p-1} of a periodic coefficient sequence.
class PeriodicTable {
public:
    explicit PeriodicTable(std::vector<Matrix> coeffs);

    [[nodiscard]] int period() const noexcept { return static_cast<int>(coeffs_.size()); }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(coeffs_.front().rows()); }
    [[nodiscard]] const Matrix& at(int t) const;
    [[nodiscard]] const std::vector<Matrix>& coeffs() const noexcept { return coeffs_; }

    /// Period matrix A_{p-1} ... A_0.
    [[nodiscard]] Matrix monodromy() const;

    /// p-th roots of the Floquet multiplier moduli, sorted ascending (zeros kept).
    [[nodiscard]] std::vector<double> floquet_rates() const;

    [[nodiscard]] PeriodicTable scaled(double gamma) const;

private:
    std::vector<Matrix> coeffs_;
};

enum class Structure { Autonomous, Periodic, AsymPeriodic, General };

[[nodiscard]] std::string to_string(Structure s);

class LinearSystem {
public:
    using CoeffFn = std::function<Matrix(int)>;

    static LinearSystem autonomous(Matrix a);
    static LinearSystem periodic(std::vector<Matrix> table);
    /// Coefficients converging to periodic limits along the two half axes.
    static LinearSystem asym_periodic(int dim, CoeffFn coeff, PeriodicTable minus, PeriodicTable plus);
    static LinearSystem general(int dim, CoeffFn coeff);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] Structure structure() const noexcept { return structure_; }
    [[nodiscard]] Matrix at(int t) const;

    /// Periodic data governing the given half axis (Z+ or Z-). Only for
    /// autonomous, periodic and asym_periodic systems.
    [[nodiscard]] const PeriodicTable& limit(Interval side) const;

    /// Largest period involved, 1 for general systems.
    [[nodiscard]] int period_hint() const noexcept { return period_hint_; }

    /// The system x_{t+1} = gamma^{-1} A_t x_t.
    [[nodiscard]] LinearSystem scaled(double gamma) const;

    /// Same coefficients with the structural tag dropped (heuristic route).
    [[nodiscard]] LinearSystem as_general() const;

    /// sup |A_t| sampled over the window.
    [[nodiscard]] double bound(const Window& w) const;

    /// Spot-checks the structural invariants on the window; throws
    /// std::invalid_argument on violation.
    void validate(const Window& w, double tol = 1e-8) const;

private:
    LinearSystem() = default;

    int dim_ = 0;
    Structure structure_ = Structure::General;
    CoeffFn coeff_;
    std::optional<PeriodicTable> minus_;
    std::optional<PeriodicTable> plus_;
    int period_hint_ = 1;
};

/// Evolution operator Phi(t, s) = A_{t-1} ... A_s for s <= t.
[[nodiscard]] Matrix evolution(const LinearSystem& sys, int t, int s);

struct EdOptions {
    /// Relative distance of a growth rate to 1 below which the splitting is "marginal".
    double tol = 1e-6;
    /// Iteration length for fiber computations; 0 picks one from the spectral gap.
    int horizon = 0;
    /// Largest acceptable dichotomy constant when fitting (K, alpha).
    double k_cap = 1e8;
    /// Smallest singular value of [stable | unstable] bases accepted as a splitting on Z.
    double transversality_tol = 1e-10;
};

struct DichotomyReport {
    Interval interval = Interval::Z;
    bool has_ed = false;
    int projector_rank = 0;
    Matrix projector_at_0;
    double K = 1.0;
    double alpha = 0.5;
    /// Empty on success; "marginal", "rank mismatch", "non-transversal", ...
    std::string diagnostic;
    /// True when decided by the singular-value heuristic (general structure).
    bool heuristic = false;
    /// Fiber iteration length actually used.
    int horizon = 0;
};

[[nodiscard]] DichotomyReport detect_ed(const LinearSystem& sys, Interval interval, const Window& window,
                                        const EdOptions& opts = {});

/// Invariant projectors P_t of a dichotomy with known stable rank. On Z the
/// range is the forward-decaying fiber and the kernel the backward-decaying
/// one. On a half axis the free half is fixed at t = 0 (orthogonal
/// complement) and transported invariantly.
class InvariantProjectors {
public:
    InvariantProjectors(const LinearSystem& sys, Interval interval, int stable_rank, int horizon);
    InvariantProjectors(const LinearSystem& sys, const DichotomyReport& report);

    [[nodiscard]] Matrix projector(int t) const;
    /// Orthonormal basis of R(P_t).
    [[nodiscard]] Matrix range_basis(int t) const;
    /// Orthonormal basis of N(P_t).
    [[nodiscard]] Matrix kernel_basis(int t) const;

    [[nodiscard]] int stable_rank() const noexcept { return rank_; }
    [[nodiscard]] Interval interval() const noexcept { return interval_; }

private:
    void check_time(int t) const;

    LinearSystem sys_;
    Interval interval_;
    int rank_;
    int horizon_;
};

/// Smallest K >= 1 such that both dichotomy estimates hold with rate alpha for
/// all sampled s <= t in [t_lo, t_hi].
[[nodiscard]] double fit_dichotomy_constant(const LinearSystem& sys, const InvariantProjectors& proj, int t_lo,
                                            int t_hi, double alpha);

struct SpectralInterval {
    double lo = 0.0;
    double hi = 0.0;
};

struct SpectrumReport {
    Interval interval = Interval::Z;
    std::vector<SpectralInterval> intervals;
    std::vector<std::string> warnings;
    bool heuristic = false;
};

struct SpectrumOptions {
    std::optional<double> gamma_min;
    std::optional<double> gamma_max;
    double resolution = 1e-6;
    EdOptions ed;
};

/// Dichotomy spectrum. Autonomous and periodic systems use the Floquet
/// moduli directly; other structures locate the critical growth rates and
/// test every gap between them with detect_ed on the scaled system, edges
/// refined by bisection down to `resolution`.
[[nodiscard]] SpectrumReport spectrum(const LinearSystem& sys, Interval interval, const Window& window,
                                      const SpectrumOptions& opts = {});

[[nodiscard]] bool spectrum_contains(const SpectrumReport& report, double gamma, double tol = 0.0);

/// {"interval":"Z","spectrum":[[lo,hi],...]}
[[nodiscard]] std::string spectrum_json(const SpectrumReport& report);

class NotFredholmCheckable : public NumericalError {
public:
    NotFredholmCheckable(Interval failed, const std::string& what)
        : NumericalError(what), failed_(failed) {}
    [[nodiscard]] Interval failed_half() const noexcept { return failed_; }

private:
    Interval failed_;
};

struct FredholmResult {
    int index = 0;
    DichotomyReport plus;
    DichotomyReport minus;
};

/// ind L_A = rk P_0^+ - rk P_0^-; throws NotFredholmCheckable when a half
/// axis has no dichotomy.
[[nodiscard]] FredholmResult fredholm_index(const LinearSystem& sys, const Window& window,
                                            const EdOptions& opts = {});

/// psi_t = phi_t - A_{t-1} phi_{t-1} on [t_minus + 1, t_plus].
[[nodiscard]] TruncatedSequence apply_LA(const LinearSystem& sys, const TruncatedSequence& phi);

}  // namespace homocont
