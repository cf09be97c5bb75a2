#include "homocont/homsolve.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/QR>
#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace homocont {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix complement_rows(const Matrix& basis)
{
    // Rows spanning the annihilator of span(basis).
    const Eigen::Index d = basis.rows();
    if (basis.cols() == 0) {
        return Matrix::Identity(d, d);
    }
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ();
    return q.rightCols(d - basis.cols()).transpose();
}

PeriodicTable limit_table(const LimitSide& side, int d, double lambda)
{
    std::vector<Matrix> table;
    const Vector zero = Vector::Zero(d);
    for (int t = 0; t < side.period; ++t) {
        table.push_back(side.df(t, zero, lambda));
    }
    return PeriodicTable(std::move(table));
}

void check_domain(const ParametricModel& model, const TruncatedSequence& phi)
{
    const Window& w = phi.window();
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        if (!model.omega.contains(phi.at(t))) {
            throw DomainViolation(t, "iterate leaves the domain box at t=" + std::to_string(t));
        }
    }
}

Vector stacked_residual(const ParametricModel& model, const TruncatedSequence& phi, double lambda,
                        const BoundaryRows& bc, double* eq_sup)
{
    const TruncatedSequence r = residual(model, phi, lambda);
    const Vector rf = r.flat();
    if (eq_sup != nullptr) {
        *eq_sup = rf.size() == 0 ? 0.0 : rf.cwiseAbs().maxCoeff();
    }
    Vector full(rf.size() + bc.count());
    full.head(rf.size()) = rf;
    const Window& w = phi.window();
    full.segment(rf.size(), bc.left.rows()) = bc.left * phi.at(w.t_minus());
    full.tail(bc.right.rows()) = bc.right * phi.at(w.t_plus());
    return full;
}

SparseMatrix bordered_matrix(const ParametricModel& model, const TruncatedSequence& phi, double lambda,
                             const BoundaryRows& bc)
{
    const int d = phi.dim();
    const int L = phi.window().length();
    const SparseMatrix j = jacobian(model, phi, lambda);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(j.nonZeros() + (bc.count() * d)));
    for (int k = 0; k < j.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(j, k); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
    }
    const int row0 = d * (L - 1);
    for (int i = 0; i < bc.left.rows(); ++i) {
        for (int c = 0; c < d; ++c) {
            if (bc.left(i, c) != 0.0) {
                trip.emplace_back(row0 + i, c, bc.left(i, c));
            }
        }
    }
    const int row1 = row0 + static_cast<int>(bc.left.rows());
    for (int i = 0; i < bc.right.rows(); ++i) {
        for (int c = 0; c < d; ++c) {
            if (bc.right(i, c) != 0.0) {
                trip.emplace_back(row1 + i, d * (L - 1) + c, bc.right(i, c));
            }
        }
    }
    SparseMatrix m(row1 + bc.right.rows(), d * L);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

double sup(const Vector& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// The least-squares floor of a window that is too short for the tolerance.
struct TruncationFloor {
    TruncatedSequence phi;
    double residual;
};

// Gauss-Newton iteration on a fixed window.
TruncatedSequence solve_on_window(const ParametricModel& model, TruncatedSequence phi, double lambda,
                                  const NewtonSettings& settings, const BoundaryRows& bc, NewtonDiagnostics& diag)
{
    const int d = phi.dim();
    const Window w = phi.window();
    check_domain(model, phi);
    double eq = 0.0;
    Vector full = stacked_residual(model, phi, lambda, bc, &eq);
    for (int it = 0;; ++it) {
        diag.residual_history.push_back(eq);
        diag.final_residual = eq;
        if (eq <= settings.residual_tol) {
            return phi;
        }
        if (it >= settings.max_iterations) {
            throw NonConvergence("Newton did not converge in " + std::to_string(settings.max_iterations) +
                                     " iterations (residual " + std::to_string(eq) + ")",
                                 diag.residual_history);
        }
        SparseMatrix m = bordered_matrix(model, phi, lambda, bc);
        Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
        qr.compute(m);
        if (qr.info() != Eigen::Success || qr.rank() < m.cols()) {
            throw SingularLinearization("non-hyperbolic linearization: Newton matrix is rank deficient");
        }
        const Vector dx = qr.solve(Vector(-full));
        if (!dx.allFinite()) {
            throw SingularLinearization("non-hyperbolic linearization: Newton step is not finite");
        }
        const Vector x0 = phi.flat();
        const double merit0 = sup(full);
        double step = 1.0;
        bool accepted = false;
        bool inside_seen = false;
        for (int halving = 0; halving <= 8; ++halving, step *= 0.5) {
            TruncatedSequence trial = TruncatedSequence::from_flat(w, d, x0 + step * dx);
            try {
                check_domain(model, trial);
            } catch (const DomainViolation&) {
                continue;
            }
            inside_seen = true;
            double eq_trial = 0.0;
            Vector full_trial = stacked_residual(model, trial, lambda, bc, &eq_trial);
            if (!settings.damping || sup(full_trial) < merit0 || eq_trial <= settings.residual_tol) {
                phi = std::move(trial);
                full = std::move(full_trial);
                eq = eq_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (inside_seen && sup(dx) <= 1e3 * merit0) {
                // No descent although the step is as small as the residual:
                // the truncated equations are inconsistent at this level.
                throw TruncationFloor{std::move(phi), eq};
            }
            if (!inside_seen) {
                // Report the index of the full step's first violation.
                const TruncatedSequence trial = TruncatedSequence::from_flat(w, d, x0 + std::ldexp(1.0, -8) * dx);
                check_domain(model, trial);
            }
            diag.residual_history.push_back(eq);
            throw NonConvergence("Newton line search failed after 8 step halvings", diag.residual_history);
        }
        ++diag.iterations;
    }
}

}  // namespace

Box Box::whole(int d)
{
    return {Vector::Constant(d, -kInf), Vector::Constant(d, kInf)};
}

bool Box::contains(const Vector& x) const
{
    if (lo.size() == 0 && hi.size() == 0) {
        return x.allFinite();
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x(i) > lo(i) && x(i) < hi(i))) {
            return false;
        }
    }
    return true;
}

bool Box::is_whole() const
{
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (std::isfinite(lo(i)) || std::isfinite(hi(i))) {
            return false;
        }
    }
    return true;
}

Vector dlambda(const ParametricModel& model, int t, const Vector& x, double lambda)
{
    if (model.df_dlambda) {
        return model.df_dlambda(t, x, lambda);
    }
    const double h = 1e-6 * (1.0 + std::abs(lambda));
    return (model.f(t, x, lambda + h) - model.f(t, x, lambda - h)) / (2.0 * h);
}

ModelCheck validate_model(const ParametricModel& model, const Window& window, unsigned seed, double rel_tol)
{
    ModelCheck out;
    auto fail = [&](std::string msg) {
        out.ok = false;
        out.problems.push_back(std::move(msg));
    };
    if (!model.f || !model.df) {
        fail("model lacks f or Df");
        return out;
    }
    if (!model.lambda_range.contains(model.lambda_star)) {
        fail("lambda* outside the parameter interval");
    }
    if (model.phi_star) {
        const Window& w = model.phi_star->window();
        for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
            if (!model.omega.contains(model.phi_star->at(t))) {
                fail("phi* leaves the domain at t=" + std::to_string(t));
                break;
            }
        }
    }
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> tdist(window.t_minus(), window.t_plus());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int d = model.dim;
    double fmax = 0.0;
    for (int k = 0; k < 40; ++k) {
        const int t = tdist(gen);
        Vector x(d);
        for (int i = 0; i < d; ++i) {
            x(i) = u(gen);
        }
        if (!model.omega.contains(x)) {
            x.setZero();
        }
        double lambda = model.lambda_star + 0.5 * u(gen);
        if (!model.lambda_range.contains(lambda)) {
            lambda = model.lambda_star;
        }
        const Vector fx = model.f(t, x, lambda);
        if (!fx.allFinite()) {
            fail("f is not finite at a sampled point (t=" + std::to_string(t) + ")");
            continue;
        }
        fmax = std::max(fmax, vec_norm(fx));
        const Matrix a = model.df(t, x, lambda);
        Matrix fd(d, d);
        for (int j = 0; j < d; ++j) {
            const double h = 1e-6 * (1.0 + std::abs(x(j)));
            Vector xp = x;
            Vector xm = x;
            xp(j) += h;
            xm(j) -= h;
            fd.col(j) = (model.f(t, xp, lambda) - model.f(t, xm, lambda)) / (2.0 * h);
        }
        const double err = op_norm(a - fd) / std::max(1.0, op_norm(a));
        out.worst_jacobian_error = std::max(out.worst_jacobian_error, err);
    }
    if (out.worst_jacobian_error > rel_tol) {
        fail("Df disagrees with finite differences (relative error " + std::to_string(out.worst_jacobian_error) +
             ")");
    }
    if (!std::isfinite(fmax)) {
        fail("f is unbounded on the sample set");
    }
    return out;
}

TruncatedSequence residual(const ParametricModel& model, const TruncatedSequence& phi, double lambda)
{
    if (phi.dim() != model.dim) {
        throw std::invalid_argument("sequence dimension does not match model");
    }
    check_domain(model, phi);
    const Window& w = phi.window();
    Matrix r(model.dim, w.length() - 1);
    for (int t = w.t_minus(); t < w.t_plus(); ++t) {
        r.col(w.index(t)) = phi.at(t + 1) - model.f(t, phi.at(t), lambda);
    }
    if (!r.allFinite()) {
        throw NumericalError("residual is not finite");
    }
    // The residual lives on [t_minus, t_plus - 1], which must itself be a window.
    if (w.length() - 1 < 3) {
        throw std::invalid_argument("window too short for a residual");
    }
    return {Window(w.t_minus(), w.t_plus() - 1), r};
}

SparseMatrix jacobian(const ParametricModel& model, const TruncatedSequence& phi, double lambda)
{
    check_domain(model, phi);
    const int d = model.dim;
    const Window& w = phi.window();
    const int L = w.length();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>((L - 1) * (d + d * d)));
    for (int t = w.t_minus(); t < w.t_plus(); ++t) {
        const int i = w.index(t);
        const Matrix a = model.df(t, phi.at(t), lambda);
        for (int r = 0; r < d; ++r) {
            trip.emplace_back(i * d + r, (i + 1) * d + r, 1.0);
            for (int c = 0; c < d; ++c) {
                if (a(r, c) != 0.0) {
                    trip.emplace_back(i * d + r, i * d + c, -a(r, c));
                }
            }
        }
    }
    SparseMatrix m(d * (L - 1), d * L);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

Vector residual_dlambda(const ParametricModel& model, const TruncatedSequence& phi, double lambda)
{
    const int d = model.dim;
    const Window& w = phi.window();
    Vector out(d * (w.length() - 1));
    for (int t = w.t_minus(); t < w.t_plus(); ++t) {
        out.segment(w.index(t) * d, d) = -dlambda(model, t, phi.at(t), lambda);
    }
    return out;
}

std::string to_string(BcMode m)
{
    return m == BcMode::Zero ? "zero" : "projected";
}

BcMode parse_bc_mode(const std::string& s)
{
    if (s == "zero") {
        return BcMode::Zero;
    }
    if (s == "projected") {
        return BcMode::Projected;
    }
    throw std::invalid_argument("unknown boundary condition mode '" + s + "' (expected zero or projected)");
}

BoundaryRows boundary_conditions(const ParametricModel& model, double lambda, const Window& window, BcMode mode)
{
    const int d = model.dim;
    BoundaryRows bc;
    auto zero_rows = [&]() {
        bc.mode = BcMode::Zero;
        bc.left = Matrix::Identity(d, d);
        bc.right = Matrix::Identity(d, d);
    };
    if (mode == BcMode::Zero) {
        zero_rows();
        return bc;
    }
    if (!model.has_limits()) {
        zero_rows();
        bc.warning = "projected boundary conditions need limit systems; using zero mode";
        return bc;
    }
    const LinearSystem minus = LinearSystem::periodic(limit_table(*model.minus, d, lambda).coeffs());
    const LinearSystem plus = LinearSystem::periodic(limit_table(*model.plus, d, lambda).coeffs());
    const Window probe = Window::symmetric(std::max({4, 2 * minus.period_hint(), 2 * plus.period_hint()}));
    const DichotomyReport em = detect_ed(minus, Interval::Z, probe);
    const DichotomyReport ep = detect_ed(plus, Interval::Z, probe);
    if (!em.has_ed || !ep.has_ed) {
        zero_rows();
        bc.warning = "no dichotomy for a limit linearization; using zero mode";
        return bc;
    }
    const InvariantProjectors pm(minus, em);
    const InvariantProjectors pp(plus, ep);
    bc.mode = BcMode::Projected;
    // phi_{t_minus} must lie in the backward-decaying fiber, phi_{t_plus} in the forward-decaying one.
    bc.left = complement_rows(pm.kernel_basis(window.t_minus()));
    bc.right = complement_rows(pp.range_basis(window.t_plus()));
    if (bc.count() != d) {
        bc.warning = "stable ranks of the limit systems differ; boundary block is not square";
    }
    return bc;
}

LinearSystem variational_system(const ParametricModel& model, const TruncatedSequence& phi, double lambda)
{
    const int d = model.dim;
    auto coeff = [df = model.df, phi, lambda](int t) { return df(t, phi.at(t), lambda); };
    if (model.has_limits()) {
        return LinearSystem::asym_periodic(d, coeff, limit_table(*model.minus, d, lambda),
                                           limit_table(*model.plus, d, lambda));
    }
    return LinearSystem::general(d, coeff);
}

void NewtonSettings::validate() const
{
    if (!(residual_tol > 0.0)) {
        throw std::invalid_argument("residual_tol must be positive");
    }
    if (!(window_growth_factor > 1.0)) {
        throw std::invalid_argument("window_growth_factor must exceed 1");
    }
    if (max_iterations < 0 || max_window_growths < 0) {
        throw std::invalid_argument("iteration and growth caps must be nonnegative");
    }
}

NewtonResult newton_solve(const ParametricModel& model, const TruncatedSequence& initial, double lambda,
                          const NewtonSettings& settings)
{
    settings.validate();
    if (!model.lambda_range.contains(lambda)) {
        throw std::invalid_argument("lambda outside the parameter interval");
    }
    NewtonDiagnostics diag;
    TruncatedSequence phi = initial;
    for (int growth = 0;; ++growth) {
        const Window w = phi.window();
        const BoundaryRows bc = boundary_conditions(model, lambda, w, settings.bc);
        if (!bc.warning.empty() &&
            std::find(diag.warnings.begin(), diag.warnings.end(), bc.warning) == diag.warnings.end()) {
            diag.warnings.push_back(bc.warning);
        }
        try {
            phi = solve_on_window(model, std::move(phi), lambda, settings, bc, diag);
        } catch (TruncationFloor& floor) {
            if (growth >= settings.max_window_growths) {
                std::ostringstream msg;
                msg << "residual stagnates at " << floor.residual << " on window [" << w.t_minus() << ", "
                    << w.t_plus() << "]: window too short for residual_tol";
                throw NonConvergence(msg.str(), diag.residual_history);
            }
            phi = floor.phi.restricted_to(w.grown(settings.window_growth_factor));
            ++diag.window_growths;
            continue;
        }
        diag.window = w;
        diag.tail_minus = vec_norm(phi.at(w.t_minus()));
        diag.tail_plus = vec_norm(phi.at(w.t_plus()));
        if (std::max(diag.tail_minus, diag.tail_plus) <= settings.tail_tol) {
            break;
        }
        if (growth >= settings.max_window_growths) {
            diag.warnings.push_back("solution tails exceed tail_tol on the largest window");
            break;
        }
        phi = phi.restricted_to(w.grown(settings.window_growth_factor));
        ++diag.window_growths;
    }
    return {std::move(phi), std::move(diag)};
}

HyperbolicityReport hyperbolicity_report(const ParametricModel& model, const TruncatedSequence& phi, double lambda,
                                         const EdOptions& opts)
{
    HyperbolicityReport rep;
    const LinearSystem sys = variational_system(model, phi, lambda);
    Window w = phi.window();
    if (!w.contains(0) || w.length() < 2 * sys.period_hint()) {
        const int half = std::max({std::abs(w.t_minus()), std::abs(w.t_plus()), 2 * sys.period_hint()});
        w = Window::symmetric(half);
    }
    rep.whole_axis = detect_ed(sys, Interval::Z, w, opts);
    rep.one_not_in_sigma = rep.whole_axis.has_ed;
    const DichotomyReport plus = detect_ed(sys, Interval::ZPlus, w, opts);
    const DichotomyReport minus = detect_ed(sys, Interval::ZMinus, w, opts);
    rep.one_not_in_sigma_plus = plus.has_ed;
    rep.one_not_in_sigma_minus = minus.has_ed;
    if (plus.has_ed && minus.has_ed) {
        rep.rank_plus = plus.projector_rank;
        rep.rank_minus = minus.projector_rank;
        rep.ranks_equal = rep.rank_plus == rep.rank_minus;
        rep.index = rep.rank_plus - rep.rank_minus;
    }
    SpectrumOptions so;
    so.ed = opts;
    rep.spectrum = spectrum(sys, Interval::Z, w, so);
    return rep;
}

}  // namespace homocont
