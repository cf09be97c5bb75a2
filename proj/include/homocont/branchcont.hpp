#pragma once

// Pseudo-arclength continuation of homoclinic solutions in (phi, lambda) and
// classification of the traced branches.

#include "homocont/homsolve.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace homocont {

enum class Direction { Plus, Minus };

[[nodiscard]] std::string to_string(Direction d);

enum class OutcomeCode { Reconnect, Unbounded, HitOmegaBoundary, HitLambdaBoundary, BudgetExhausted };

[[nodiscard]] std::string to_string(OutcomeCode c);

struct BranchPoint {
    double lambda = 0.0;
    TruncatedSequence phi = TruncatedSequence::zeros(Window::symmetric(1), 1);
    /// Tangent (dphi, dlambda), unit in the product max-norm.
    Vector tangent_phi;
    double tangent_lambda = 0.0;
    double sup_norm = 0.0;
    double s = 0.0;
    bool hyperbolic = true;
    bool fold_flag = false;
    double residual = 0.0;
    double tail = 0.0;
    int corrector_iterations = 0;
};

struct BranchOutcome {
    OutcomeCode code = OutcomeCode::BudgetExhausted;
    /// Which budget or event ended the trace: "lambda_range", "norm_budget",
    /// "max_points", "min_step", "omega_boundary", "lambda_boundary", "reconnect".
    std::string trigger;
    std::string evidence;
    std::optional<std::size_t> reconnect_index;
};

struct Fold {
    std::size_t after_index = 0;
    double lambda = 0.0;
    double s = 0.0;
};

struct Branch {
    Direction direction = Direction::Plus;
    std::vector<BranchPoint> points;
    std::vector<Fold> folds;
    BranchOutcome outcome;
};

struct ContinuationSettings {
    double steplength = 0.02;
    double min_step = 1e-6;
    double max_step = 0.1;
    int max_points = 2000;
    /// Distance in product norm that counts as a return; <= 0 means 10 * steplength.
    double reconnect_tol = 0.0;
    double norm_budget = 1e3;
    /// Lambda budget; the trace stops (UNBOUNDED) when it reaches either end.
    double lambda_min = -10.0;
    double lambda_max = 10.0;
    /// Weight of dlambda relative to dphi in the arclength constraint.
    double lambda_weight = 1.0;
    double residual_tol = 1e-10;
    int max_corrector_iterations = 10;
    /// Distance to a finite end of Omega or Lambda that counts as a hit.
    double boundary_tol = 1e-6;
    bool refine_folds = true;
    /// Run the whole-axis dichotomy test every n accepted points (0 = never).
    int hyperbolicity_stride = 1;
    BcMode bc = BcMode::Zero;

    void validate() const;
    [[nodiscard]] double effective_reconnect_tol() const { return reconnect_tol > 0.0 ? reconnect_tol : 10.0 * steplength; }
};

/// Traces the component through (phi0, lambda0). phi0 is corrected at fixed
/// lambda0 first; the initial tangent points toward increasing (Plus) or
/// decreasing (Minus) lambda.
[[nodiscard]] Branch continue_branch(const ParametricModel& model, const TruncatedSequence& phi0, double lambda0,
                                     Direction direction, const ContinuationSettings& settings = {});

/// Same, starting from an accepted point with a prescribed tangent.
[[nodiscard]] Branch continue_branch_from(const ParametricModel& model, const BranchPoint& start,
                                          const Vector& tangent_phi, double tangent_lambda, Direction direction,
                                          const ContinuationSettings& settings = {});

/// Product max-norm distance of two branch states (sequences compared on the union of their windows).
[[nodiscard]] double product_distance(const TruncatedSequence& a, double la, const TruncatedSequence& b, double lb);

struct Classification {
    /// Short code: "(a)/(d)", "(b1)", "(b2)", "(c)", "(b)" or "inconclusive".
    std::string alternative;
    std::string label;
    std::vector<std::string> notes;
    std::string disclaimer;
};

[[nodiscard]] Classification classify(const Branch& plus, const Branch& minus, const ParametricModel& model);

}  // namespace homocont
