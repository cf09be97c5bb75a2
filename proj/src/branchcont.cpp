#include "homocont/branchcont.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace homocont {

namespace {

struct State {
    TruncatedSequence phi;
    double lambda;
};

enum class Failure { None, Singular, NonConverged, Domain };

struct Corrected {
    State state;
    int iterations = 0;
    double residual = 0.0;
};

double sup(const Vector& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Vector stack(const State& s)
{
    Vector x(s.phi.values().size() + 1);
    x.head(x.size() - 1) = s.phi.flat();
    x(x.size() - 1) = s.lambda;
    return x;
}

State unstack(const Window& w, int d, const Vector& x)
{
    return {TruncatedSequence::from_flat(w, d, x.head(x.size() - 1)), x(x.size() - 1)};
}

// [dG/dphi  dG/dlambda; BC  0; border] with the residual stacked the same way.
SparseMatrix extended_matrix(const ParametricModel& model, const State& s, const BoundaryRows& bc,
                             const Vector& border)
{
    const int d = model.dim;
    const int L = s.phi.window().length();
    const int n = d * L;
    const SparseMatrix j = jacobian(model, s.phi, s.lambda);
    const Vector gl = residual_dlambda(model, s.phi, s.lambda);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(j.nonZeros() + gl.size() + bc.count() * d + n + 1));
    for (int k = 0; k < j.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(j, k); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
    }
    for (int r = 0; r < gl.size(); ++r) {
        if (gl(r) != 0.0) {
            trip.emplace_back(r, n, gl(r));
        }
    }
    int row = d * (L - 1);
    for (int i = 0; i < bc.left.rows(); ++i, ++row) {
        for (int c = 0; c < d; ++c) {
            if (bc.left(i, c) != 0.0) {
                trip.emplace_back(row, c, bc.left(i, c));
            }
        }
    }
    for (int i = 0; i < bc.right.rows(); ++i, ++row) {
        for (int c = 0; c < d; ++c) {
            if (bc.right(i, c) != 0.0) {
                trip.emplace_back(row, d * (L - 1) + c, bc.right(i, c));
            }
        }
    }
    for (int c = 0; c <= n; ++c) {
        if (border(c) != 0.0) {
            trip.emplace_back(row, c, border(c));
        }
    }
    SparseMatrix m(row + 1, n + 1);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

Vector equations(const ParametricModel& model, const State& s, const BoundaryRows& bc, double* eq_sup)
{
    const Vector r = residual(model, s.phi, s.lambda).flat();
    *eq_sup = sup(r);
    const Window& w = s.phi.window();
    Vector out(r.size() + bc.count());
    out.head(r.size()) = r;
    out.segment(r.size(), bc.left.rows()) = bc.left * s.phi.at(w.t_minus());
    out.tail(bc.right.rows()) = bc.right * s.phi.at(w.t_plus());
    return out;
}

using QR = Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>>;

// Gauss-Newton on G = 0, BC = 0, border . X = target.
std::optional<Corrected> correct(const ParametricModel& model, State s, const Vector& border, double target,
                                 const BoundaryRows& bc, const ContinuationSettings& cfg, Failure& why)
{
    const Window w = s.phi.window();
    const int d = model.dim;
    for (int it = 0;; ++it) {
        double eq = 0.0;
        Vector f;
        try {
            f = equations(model, s, bc, &eq);
        } catch (const DomainViolation&) {
            why = Failure::Domain;
            return std::nullopt;
        } catch (const NumericalError&) {
            why = Failure::NonConverged;
            return std::nullopt;
        }
        const Vector x = stack(s);
        const double con = border.dot(x) - target;
        if (eq <= cfg.residual_tol && std::abs(con) <= cfg.residual_tol) {
            return Corrected{std::move(s), it, eq};
        }
        if (it >= cfg.max_corrector_iterations || !std::isfinite(eq)) {
            why = Failure::NonConverged;
            return std::nullopt;
        }
        if (!model.lambda_range.contains(s.lambda)) {
            why = Failure::Domain;
            return std::nullopt;
        }
        const SparseMatrix m = extended_matrix(model, s, bc, border);
        QR qr;
        qr.compute(m);
        if (qr.info() != Eigen::Success || qr.rank() < m.cols()) {
            why = Failure::Singular;
            return std::nullopt;
        }
        Vector rhs(f.size() + 1);
        rhs.head(f.size()) = -f;
        rhs(f.size()) = -con;
        const Vector dx = qr.solve(rhs);
        if (!dx.allFinite()) {
            why = Failure::Singular;
            return std::nullopt;
        }
        s = unstack(w, d, x + dx);
    }
}

struct Tangent {
    Vector phi;
    double lambda = 0.0;
};

// Kernel direction of [G_phi G_lambda; BC 0], bordered by `border`, unit in the product max-norm.
std::optional<Tangent> tangent_at(const ParametricModel& model, const State& s, const BoundaryRows& bc,
                                  const Vector& border)
{
    const SparseMatrix m = extended_matrix(model, s, bc, border);
    QR qr;
    qr.compute(m);
    if (qr.info() != Eigen::Success || qr.rank() < m.cols()) {
        return std::nullopt;
    }
    Vector rhs = Vector::Zero(m.rows());
    rhs(rhs.size() - 1) = 1.0;
    const Vector v = qr.solve(rhs);
    const double scale = sup(v);
    if (!(scale > 0.0) || !v.allFinite()) {
        return std::nullopt;
    }
    return Tangent{v.head(v.size() - 1) / scale, v(v.size() - 1) / scale};
}

Vector weighted(const Tangent& t, double w)
{
    Vector c(t.phi.size() + 1);
    c.head(t.phi.size()) = t.phi;
    c(t.phi.size()) = w * t.lambda;
    return c;
}

bool near_box_boundary(const Box& box, const TruncatedSequence& phi, double tol)
{
    if (box.is_whole()) {
        return false;
    }
    const Window& w = phi.window();
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        const Vector x = phi.at(t);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) - box.lo(i) < tol || box.hi(i) - x(i) < tol) {
                return true;
            }
        }
    }
    return false;
}

bool hyperbolic_at(const ParametricModel& model, const State& s)
{
    try {
        const LinearSystem sys = variational_system(model, s.phi, s.lambda);
        const Window& w = s.phi.window();
        if (!w.contains(0)) {
            return false;
        }
        return detect_ed(sys, Interval::Z, w).has_ed;
    } catch (const std::exception&) {
        return false;
    }
}

// Spatial hash over (lambda, sup_norm); both are 1-Lipschitz in the product norm.
class ReconnectIndex {
public:
    explicit ReconnectIndex(double cell) : cell_(cell) {}

    void add(std::size_t i, double lambda, double norm) { cells_[key(lambda, norm)].push_back(i); }

    template <typename Fn>
    void for_neighbours(double lambda, double norm, Fn&& fn) const
    {
        const auto [a, b] = key(lambda, norm);
        for (long da = -1; da <= 1; ++da) {
            for (long db = -1; db <= 1; ++db) {
                const auto it = cells_.find({a + da, b + db});
                if (it == cells_.end()) {
                    continue;
                }
                for (std::size_t i : it->second) {
                    fn(i);
                }
            }
        }
    }

private:
    [[nodiscard]] std::pair<long, long> key(double lambda, double norm) const
    {
        return {static_cast<long>(std::floor(lambda / cell_)), static_cast<long>(std::floor(norm / cell_))};
    }

    double cell_;
    std::map<std::pair<long, long>, std::vector<std::size_t>> cells_;
};

BranchPoint make_point(const Corrected& c, const Tangent& t, double s, double tail)
{
    BranchPoint p;
    p.lambda = c.state.lambda;
    p.phi = c.state.phi;
    p.tangent_phi = t.phi;
    p.tangent_lambda = t.lambda;
    p.sup_norm = sup_norm(c.state.phi);
    p.s = s;
    p.residual = c.residual;
    p.tail = tail;
    p.corrector_iterations = c.iterations;
    return p;
}

double tail_of(const TruncatedSequence& phi)
{
    const Window& w = phi.window();
    return std::max(vec_norm(phi.at(w.t_minus())), vec_norm(phi.at(w.t_plus())));
}

// Bisection on the predictor step for the point where dlambda/ds vanishes.
std::optional<double> refine_fold(const ParametricModel& model, const BranchPoint& prev, double h_hi,
                                  const BoundaryRows& bc, const ContinuationSettings& cfg)
{
    const int d = model.dim;
    const Window w = prev.phi.window();
    const Tangent t0{prev.tangent_phi, prev.tangent_lambda};
    const Vector c0 = weighted(t0, cfg.lambda_weight);
    const Vector x0 = stack({prev.phi, prev.lambda});
    Vector dir(x0.size());
    dir.head(x0.size() - 1) = t0.phi;
    dir(x0.size() - 1) = t0.lambda;
    const double sign0 = prev.tangent_lambda >= 0.0 ? 1.0 : -1.0;
    double lo = 0.0;
    double hi = h_hi;
    std::optional<double> best;
    double best_slope = std::abs(prev.tangent_lambda);
    best = prev.lambda;
    for (int k = 0; k < 40 && hi - lo > 1e-12; ++k) {
        const double mid = 0.5 * (lo + hi);
        const Vector xp = x0 + mid * dir;
        Failure why = Failure::None;
        auto c = correct(model, unstack(w, d, xp), c0, c0.dot(xp), bc, cfg, why);
        if (!c) {
            break;
        }
        const auto t = tangent_at(model, c->state, bc, c0);
        if (!t) {
            break;
        }
        if (std::abs(t->lambda) < best_slope) {
            best_slope = std::abs(t->lambda);
            best = c->state.lambda;
        }
        if (t->lambda * sign0 > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return best;
}

Branch trace(const ParametricModel& model, BranchPoint start, Direction direction, const ContinuationSettings& cfg)
{
    Branch br;
    br.direction = direction;
    const int d = model.dim;
    const Window w = start.phi.window();
    const BoundaryRows bc = boundary_conditions(model, start.lambda, w, cfg.bc);
    const double rtol = cfg.effective_reconnect_tol();
    ReconnectIndex index(rtol);

    // Effective lambda limits: the budget and, when finite, Lambda itself.
    const double lam_lo_budget = cfg.lambda_min;
    const double lam_hi_budget = cfg.lambda_max;
    const double lam_lo_box = model.lambda_range.lo + cfg.boundary_tol;
    const double lam_hi_box = model.lambda_range.hi - cfg.boundary_tol;
    const double lam_lo = std::max(lam_lo_budget, lam_lo_box);
    const double lam_hi = std::min(lam_hi_budget, lam_hi_box);

    if (cfg.hyperbolicity_stride > 0) {
        start.hyperbolic = hyperbolic_at(model, {start.phi, start.lambda});
    }
    br.points.push_back(start);
    index.add(0, start.lambda, start.sup_norm);

    auto finish = [&](OutcomeCode code, std::string trigger, std::string evidence) {
        br.outcome.code = code;
        br.outcome.trigger = std::move(trigger);
        br.outcome.evidence = std::move(evidence);
        return br;
    };

    double h = cfg.steplength;
    Failure last_failure = Failure::None;
    while (true) {
        if (static_cast<int>(br.points.size()) >= cfg.max_points) {
            return finish(OutcomeCode::BudgetExhausted, "max_points",
                          "stopped after " + std::to_string(cfg.max_points) + " points");
        }
        const BranchPoint& cur = br.points.back();
        const Tangent tc{cur.tangent_phi, cur.tangent_lambda};
        const Vector c = weighted(tc, cfg.lambda_weight);
        const Vector x0 = stack({cur.phi, cur.lambda});
        Vector dir(x0.size());
        dir.head(x0.size() - 1) = tc.phi;
        dir(x0.size() - 1) = tc.lambda;

        double step = h;
        bool terminal = false;
        double fixed_lambda = 0.0;
        const double lam_pred = cur.lambda + step * tc.lambda;
        if (lam_pred >= lam_hi && tc.lambda > 0.0) {
            terminal = true;
            fixed_lambda = lam_hi;
            step = (lam_hi - cur.lambda) / tc.lambda;
        } else if (lam_pred <= lam_lo && tc.lambda < 0.0) {
            terminal = true;
            fixed_lambda = lam_lo;
            step = (lam_lo - cur.lambda) / tc.lambda;
        }
        const Vector xp = x0 + step * dir;
        Failure why = Failure::None;
        std::optional<Corrected> next;
        if (terminal) {
            Vector e = Vector::Zero(x0.size());
            e(x0.size() - 1) = 1.0;
            next = correct(model, unstack(w, d, xp), e, fixed_lambda, bc, cfg, why);
        } else {
            next = correct(model, unstack(w, d, xp), c, c.dot(xp), bc, cfg, why);
        }
        std::optional<Tangent> tn;
        if (next) {
            tn = tangent_at(model, next->state, bc, c);
            if (!tn) {
                why = Failure::Singular;
            }
        }
        if (!next || !tn) {
            last_failure = why;
            h *= 0.5;
            if (h < cfg.min_step) {
                if (last_failure == Failure::Domain && !model.omega.is_whole()) {
                    return finish(OutcomeCode::HitOmegaBoundary, "omega_boundary",
                                  "corrector leaves Omega for every step above min_step at lambda=" +
                                      std::to_string(cur.lambda));
                }
                return finish(OutcomeCode::BudgetExhausted, "min_step",
                              "corrector failed with step below min_step at lambda=" + std::to_string(cur.lambda));
            }
            continue;
        }
        Tangent t = *tn;
        if (t.phi.dot(tc.phi) + cfg.lambda_weight * t.lambda * tc.lambda < 0.0) {
            t.phi = -t.phi;
            t.lambda = -t.lambda;
        }
        const double ds = product_distance(cur.phi, cur.lambda, next->state.phi, next->state.lambda);
        BranchPoint p = make_point(*next, t, cur.s + ds, tail_of(next->state.phi));
        if (cfg.hyperbolicity_stride > 0 && br.points.size() % static_cast<std::size_t>(cfg.hyperbolicity_stride) == 0) {
            p.hyperbolic = hyperbolic_at(model, next->state);
        }
        if ((t.lambda > 0.0) != (tc.lambda > 0.0) && t.lambda != 0.0 && tc.lambda != 0.0) {
            p.fold_flag = true;
            Fold f;
            f.after_index = br.points.size() - 1;
            f.lambda = 0.5 * (cur.lambda + p.lambda);
            f.s = 0.5 * (cur.s + p.s);
            if (cfg.refine_folds) {
                if (const auto l = refine_fold(model, cur, step, bc, cfg)) {
                    f.lambda = *l;
                }
            }
            br.folds.push_back(f);
        }
        // Step control by corrector effort.
        if (next->iterations <= 2) {
            h = std::min(cfg.max_step, h * 1.5);
        } else if (next->iterations >= 5) {
            h = std::max(cfg.min_step, h * 0.7);
        }
        const std::size_t idx = br.points.size();
        br.points.push_back(std::move(p));
        const BranchPoint& np = br.points.back();

        if (terminal) {
            const bool box_hit = (fixed_lambda == lam_hi && lam_hi_box <= lam_hi_budget) ||
                                 (fixed_lambda == lam_lo && lam_lo_box >= lam_lo_budget);
            if (box_hit) {
                return finish(OutcomeCode::HitLambdaBoundary, "lambda_boundary",
                              "lambda reached the end of Lambda at " + std::to_string(fixed_lambda));
            }
            return finish(OutcomeCode::Unbounded, "lambda_range",
                          "lambda budget end reached at " + std::to_string(fixed_lambda));
        }
        if (np.sup_norm > cfg.norm_budget) {
            return finish(OutcomeCode::Unbounded, "norm_budget",
                          "sup norm " + std::to_string(np.sup_norm) + " exceeds budget at lambda=" +
                              std::to_string(np.lambda));
        }
        if (near_box_boundary(model.omega, np.phi, cfg.boundary_tol)) {
            return finish(OutcomeCode::HitOmegaBoundary, "omega_boundary",
                          "iterate within boundary_tol of the boundary of Omega at lambda=" + std::to_string(np.lambda));
        }
        std::optional<std::size_t> hit;
        index.for_neighbours(np.lambda, np.sup_norm, [&](std::size_t j) {
            if (hit || np.s - br.points[j].s <= 3.0 * rtol) {
                return;
            }
            if (product_distance(br.points[j].phi, br.points[j].lambda, np.phi, np.lambda) < rtol) {
                hit = j;
            }
        });
        index.add(idx, np.lambda, np.sup_norm);
        if (hit) {
            br.outcome.reconnect_index = *hit;
            return finish(OutcomeCode::Reconnect, "reconnect",
                          "point " + std::to_string(idx) + " returns within " + std::to_string(rtol) + " of point " +
                              std::to_string(*hit));
        }
    }
}

}  // namespace

std::string to_string(Direction d)
{
    return d == Direction::Plus ? "plus" : "minus";
}

std::string to_string(OutcomeCode c)
{
    switch (c) {
    case OutcomeCode::Reconnect: return "RECONNECT";
    case OutcomeCode::Unbounded: return "UNBOUNDED";
    case OutcomeCode::HitOmegaBoundary: return "HIT_OMEGA_BOUNDARY";
    case OutcomeCode::HitLambdaBoundary: return "HIT_LAMBDA_BOUNDARY";
    case OutcomeCode::BudgetExhausted: return "BUDGET_EXHAUSTED";
    }
    return "?";
}

void ContinuationSettings::validate() const
{
    if (!(steplength > 0.0) || !(min_step > 0.0) || !(max_step >= steplength) || min_step > steplength) {
        throw std::invalid_argument("continuation steps need 0 < min_step <= steplength <= max_step");
    }
    if (max_points < 1) {
        throw std::invalid_argument("max_points must be positive");
    }
    if (!(lambda_min < lambda_max)) {
        throw std::invalid_argument("lambda budget needs lambda_min < lambda_max");
    }
    if (!(residual_tol > 0.0) || !(lambda_weight > 0.0) || !(norm_budget > 0.0)) {
        throw std::invalid_argument("residual_tol, lambda_weight and norm_budget must be positive");
    }
}

double product_distance(const TruncatedSequence& a, double la, const TruncatedSequence& b, double lb)
{
    const Window& wa = a.window();
    const Window& wb = b.window();
    double m = std::abs(la - lb);
    if (wa == wb) {
        return std::max(m, (a.values() - b.values()).cwiseAbs().maxCoeff());
    }
    const int lo = std::min(wa.t_minus(), wb.t_minus());
    const int hi = std::max(wa.t_plus(), wb.t_plus());
    for (int t = lo; t <= hi; ++t) {
        m = std::max(m, vec_norm(a.at(t) - b.at(t)));
    }
    return m;
}

Branch continue_branch(const ParametricModel& model, const TruncatedSequence& phi0, double lambda0,
                       Direction direction, const ContinuationSettings& settings)
{
    settings.validate();
    NewtonSettings ns;
    ns.residual_tol = settings.residual_tol;
    ns.max_window_growths = 0;
    ns.bc = settings.bc;
    const NewtonResult start = newton_solve(model, phi0, lambda0, ns);
    const Window w = start.phi.window();
    const BoundaryRows bc = boundary_conditions(model, lambda0, w, settings.bc);
    const int n = model.dim * w.length();
    Vector border = Vector::Zero(n + 1);
    border(n) = 1.0;
    const State s{start.phi, lambda0};
    auto t = tangent_at(model, s, bc, border);
    if (!t) {
        throw SingularLinearization("non-hyperbolic linearization: no tangent at the starting point");
    }
    const double want = direction == Direction::Plus ? 1.0 : -1.0;
    if (t->lambda * want < 0.0) {
        t->phi = -t->phi;
        t->lambda = -t->lambda;
    }
    Corrected c{s, start.diagnostics.iterations, start.diagnostics.final_residual};
    BranchPoint p = make_point(c, *t, 0.0, tail_of(start.phi));
    return trace(model, std::move(p), direction, settings);
}

Branch continue_branch_from(const ParametricModel& model, const BranchPoint& start, const Vector& tangent_phi,
                            double tangent_lambda, Direction direction, const ContinuationSettings& settings)
{
    settings.validate();
    BranchPoint p = start;
    const double scale = std::max(tangent_phi.size() ? tangent_phi.cwiseAbs().maxCoeff() : 0.0, std::abs(tangent_lambda));
    if (!(scale > 0.0)) {
        throw std::invalid_argument("tangent must be nonzero");
    }
    p.tangent_phi = tangent_phi / scale;
    p.tangent_lambda = tangent_lambda / scale;
    p.s = 0.0;
    p.fold_flag = false;
    return trace(model, std::move(p), direction, settings);
}

Classification classify(const Branch& plus, const Branch& minus, const ParametricModel& model)
{
    Classification c;
    c.disclaimer =
        "Numerical evidence from finite traces and budgets, not a proof; the global continuation theorem "
        "guarantees that at least one alternative holds.";
    const bool global = model.omega.is_whole() && model.lambda_range.is_whole();
    auto note = [&](const Branch& b, const std::string& side) {
        std::string s = "C" + side + ": " + to_string(b.outcome.code) + " (" + b.outcome.trigger + ")";
        if (b.outcome.trigger == "norm_budget") {
            s += "; unbounded in phi, evidence for (b1)";
        }
        if (!b.folds.empty()) {
            s += "; " + std::to_string(b.folds.size()) + " fold(s)";
        }
        c.notes.push_back(s);
    };
    note(plus, "+");
    note(minus, "-");
    auto any = [&](OutcomeCode code) { return plus.outcome.code == code || minus.outcome.code == code; };
    if (any(OutcomeCode::Reconnect)) {
        c.alternative = "(a)/(d)";
        c.label = "(a)/(d): a trace returns to an earlier point; C_- and C_+ meet away from (phi*, lambda*) or "
                  "C \\ {(phi*, lambda*)} is connected (not distinguishable numerically)";
    } else if (any(OutcomeCode::HitOmegaBoundary)) {
        c.alternative = "(b1)";
        const std::string side = plus.outcome.code == OutcomeCode::HitOmegaBoundary ? "C_+" : "C_-";
        c.label = "(b1): closure of Pi_1(" + side + ") meets the boundary of l0(Omega)";
    } else if (any(OutcomeCode::HitLambdaBoundary)) {
        c.alternative = "(b2)";
        const std::string side = plus.outcome.code == OutcomeCode::HitLambdaBoundary ? "C_+" : "C_-";
        c.label = "(b2): closure of Pi_2(" + side + ") meets the boundary of Lambda";
    } else if (plus.outcome.code == OutcomeCode::Unbounded && minus.outcome.code == OutcomeCode::Unbounded) {
        if (global) {
            c.alternative = "(c)";
            c.label = "(c): two unbounded disjoint sets";
        } else {
            c.alternative = "(b)";
            c.label = "(b): both traces unbounded within a restricted Omega or Lambda";
        }
    } else {
        c.alternative = "inconclusive";
        c.label = "inconclusive: a trace exhausted its budget before an alternative was observed";
    }
    return c;
}

}  // namespace homocont
