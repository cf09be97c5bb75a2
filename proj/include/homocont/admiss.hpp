#pragma once

// Sufficient conditions for a (periodic) limit equation to have only the
// trivial bounded entire solution, plus the Green's function of a hyperbolic
// linear system.

#include "homocont/homsolve.hpp"
#include "homocont/lindich.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace homocont {

enum class Criterion { Contractive, Semilinear, AsymptoticallyLinear, PeriodicFloquet, Triangular, None };

[[nodiscard]] std::string to_string(Criterion c);

struct AdmissibilityCertificate {
    Criterion criterion = Criterion::None;
    bool verified = false;
    /// The checked strict inequality lhs < rhs.
    double lhs = 0.0;
    double rhs = 0.0;
    std::string reason;
    /// Further reported numbers (e.g. both semilinear bounds, kappa values).
    std::map<std::string, double> numbers;
};

/// A p-periodic limit right-hand side at a fixed parameter.
struct LimitSystem {
    int dim = 1;
    int period = 1;
    std::function<Vector(int, const Vector&)> g;
    std::function<Matrix(int, const Vector&)> dg;
    std::vector<double> lipschitz;
    std::vector<Matrix> linear;  // empty unless a semilinear split is known
    double lip_r = 0.0;
    bool triangular = false;

    [[nodiscard]] static LimitSystem from_side(const LimitSide& side, int dim, double lambda);
};

/// Largest ratio |g_t(x) - g_t(y)| / (lip_t |x - y|) over random sample pairs;
/// values above 1 mean the Lipschitz data is too small.
[[nodiscard]] double sampled_lipschitz_ratio(const LimitSystem& sys, unsigned seed = 0, int samples = 200);

[[nodiscard]] AdmissibilityCertificate check_contractive(const LimitSystem& sys, int n_max = 16);

/// Needs an ED of A on Z; compares lip_r with the contraction bound
/// (1 - alpha) / (K (1 + alpha)) and reports the printed K / (1 - alpha) as well.
[[nodiscard]] AdmissibilityCertificate check_semilinear(const LinearSystem& a, double lip_r,
                                                        const Window& window = Window::symmetric(40));

struct AsymLinearData {
    double p = 2.0;
    double rho_q = 0.0;
    double mu_q = 0.0;
    double lambda_q = 0.0;
    double radius = 1.0;
};

/// kappa closed form K alpha ((1 + alpha^p) / (1 - alpha^p))^{1/p}.
[[nodiscard]] double kappa_closed_form(double K, double alpha, double p);

/// sup_t (sum_s |G(t, s+1)|^p)^{1/p} over the window, with the s-sum
/// truncated where the geometric tail drops below `tail_tol`.
[[nodiscard]] double kappa_green_sum(const LinearSystem& a, const DichotomyReport& report, double p,
                                     const Window& window, double tail_tol = 1e-14);

[[nodiscard]] AdmissibilityCertificate check_asymptotically_linear(const LinearSystem& a, const AsymLinearData& data,
                                                                   const Window& window = Window::symmetric(40));

/// Only-trivial-bounded-solution check for lower triangular cascades whose
/// diagonal dynamics are linear and hyperbolic.
[[nodiscard]] AdmissibilityCertificate check_triangular(const LimitSystem& sys, unsigned seed = 0);

/// Linear periodic limit equation without Floquet rate 1.
[[nodiscard]] AdmissibilityCertificate check_periodic_floquet(const std::vector<Matrix>& table);

/// Green's function G(t,s) = Phi(t,s) P_s (s <= t), -Phibar(t,s)(I - P_s) (s > t).
class GreenFunction {
public:
    GreenFunction(const LinearSystem& a, const DichotomyReport& report);

    [[nodiscard]] Matrix operator()(int t, int s) const;

private:
    LinearSystem sys_;
    InvariantProjectors proj_;
};

[[nodiscard]] Matrix green_function(const LinearSystem& a, const DichotomyReport& report, int t, int s);

/// Certificates for the alpha-side (t -> -inf) and omega-side (t -> +inf)
/// limit equations. Throws std::invalid_argument("no certificate: ...") when
/// the model carries no limit systems.
[[nodiscard]] std::pair<AdmissibilityCertificate, AdmissibilityCertificate>
check_limit_admissibility(const ParametricModel& model, double lambda);

}  // namespace homocont
