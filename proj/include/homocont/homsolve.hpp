#pragma once

// Homoclinic solutions as zeros of G(phi, lambda)_t = phi_{t+1} - f_t(phi_t, lambda)
// on a finite window, with a window-adaptive Gauss-Newton solver.

#include "homocont/errors.hpp"
#include "homocont/lindich.hpp"
#include "homocont/seqspace.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace homocont {

using RhsFn = std::function<Vector(int t, const Vector& x, double lambda)>;
using JacFn = std::function<Matrix(int t, const Vector& x, double lambda)>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Open axis-aligned box; infinite bounds allowed.
struct Box {
    Vector lo;
    Vector hi;

    [[nodiscard]] static Box whole(int d);
    [[nodiscard]] bool contains(const Vector& x) const;
    /// True when every bound is infinite (Omega = R^d).
    [[nodiscard]] bool is_whole() const;
};

struct ParameterRange {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    [[nodiscard]] bool contains(double l) const { return l > lo && l < hi; }
    [[nodiscard]] bool is_whole() const { return !std::isfinite(lo) && !std::isfinite(hi); }
};

/// Periodic limit right-hand side along one half axis, plus whatever data the
/// admissibility checks can use.
struct LimitSide {
    int period = 1;
    RhsFn f;
    JacFn df;
    /// Lipschitz constants lip f_t over one period (contractive criterion).
    std::vector<double> lipschitz;
    /// Semilinear split f_t(x) = A_t x + r_t(x): one period of A (may depend
    /// on lambda) and sup lip r_t.
    std::function<std::vector<Matrix>(double lambda)> linear_part;
    double lip_r = 0.0;
    /// Lower-triangular cascade structure (component i depends on x_1..x_i only).
    bool triangular = false;
};

struct ParametricModel {
    std::string name;
    int dim = 1;
    RhsFn f;
    JacFn df;
    /// Optional; central differences are used when empty.
    RhsFn df_dlambda;
    Box omega;
    ParameterRange lambda_range;
    std::optional<LimitSide> minus;
    std::optional<LimitSide> plus;
    /// Reference homoclinic (phi*, lambda*).
    std::optional<TruncatedSequence> phi_star;
    double lambda_star = 0.0;

    [[nodiscard]] bool has_limits() const { return minus.has_value() && plus.has_value(); }
};

/// d/dlambda f_t(x, lambda).
[[nodiscard]] Vector dlambda(const ParametricModel& model, int t, const Vector& x, double lambda);

struct ModelCheck {
    bool ok = true;
    double worst_jacobian_error = 0.0;
    std::vector<std::string> problems;
};

/// Sampled checks: reference inside Omega and Lambda, Df against central
/// differences, boundedness of f over a compact sample set.
[[nodiscard]] ModelCheck validate_model(const ParametricModel& model, const Window& window, unsigned seed = 0,
                                        double rel_tol = 1e-5);

/// r_t = phi_{t+1} - f_t(phi_t, lambda), t in [t_minus, t_plus - 1].
[[nodiscard]] TruncatedSequence residual(const ParametricModel& model, const TruncatedSequence& phi, double lambda);

/// Sparse d(L-1) x dL block-bidiagonal matrix of psi -> psi_{t+1} - Df_t(phi_t) psi_t.
[[nodiscard]] SparseMatrix jacobian(const ParametricModel& model, const TruncatedSequence& phi, double lambda);

/// Column d residual / d lambda (length d(L-1)).
[[nodiscard]] Vector residual_dlambda(const ParametricModel& model, const TruncatedSequence& phi, double lambda);

enum class BcMode { Zero, Projected };

[[nodiscard]] std::string to_string(BcMode m);
[[nodiscard]] BcMode parse_bc_mode(const std::string& s);

/// Linear constraints left * phi_{t_minus} = 0 and right * phi_{t_plus} = 0.
struct BoundaryRows {
    BcMode mode = BcMode::Zero;
    Matrix left;
    Matrix right;
    std::string warning;

    [[nodiscard]] int count() const { return static_cast<int>(left.rows() + right.rows()); }
};

[[nodiscard]] BoundaryRows boundary_conditions(const ParametricModel& model, double lambda, const Window& window,
                                               BcMode mode);

/// x_{t+1} = Df_t(phi_t, lambda) x_t, with phi extended by zero; tagged
/// asymptotically periodic when the model carries limit data.
[[nodiscard]] LinearSystem variational_system(const ParametricModel& model, const TruncatedSequence& phi,
                                              double lambda);

struct NewtonSettings {
    double residual_tol = 1e-10;
    int max_iterations = 30;
    double window_growth_factor = 1.5;
    double tail_tol = 1e-10;
    int max_window_growths = 4;
    bool damping = true;
    BcMode bc = BcMode::Zero;

    void validate() const;
};

struct NewtonDiagnostics {
    int iterations = 0;
    double final_residual = 0.0;
    Window window{-1, 1};
    double tail_minus = 0.0;
    double tail_plus = 0.0;
    int window_growths = 0;
    std::vector<double> residual_history;
    std::vector<std::string> warnings;
};

struct NewtonResult {
    TruncatedSequence phi;
    NewtonDiagnostics diagnostics;
};

[[nodiscard]] NewtonResult newton_solve(const ParametricModel& model, const TruncatedSequence& initial, double lambda,
                                        const NewtonSettings& settings = {});

struct HyperbolicityReport {
    bool one_not_in_sigma = false;
    bool one_not_in_sigma_plus = false;
    bool one_not_in_sigma_minus = false;
    bool ranks_equal = false;
    int rank_plus = -1;
    int rank_minus = -1;
    std::optional<int> index;
    DichotomyReport whole_axis;
    SpectrumReport spectrum;

    [[nodiscard]] bool hypotheses_hold() const
    {
        return one_not_in_sigma && one_not_in_sigma_plus && one_not_in_sigma_minus && ranks_equal;
    }
};

[[nodiscard]] HyperbolicityReport hyperbolicity_report(const ParametricModel& model, const TruncatedSequence& phi,
                                                       double lambda, const EdOptions& opts = {});

}  // namespace homocont
