#include <algorithm>
#include <doctest.h>

#include "oracles.hpp"

#include "homocont/homsolve.hpp"
#include "homocont/models.hpp"

#include <random>

using namespace homocont;

namespace {

ParametricModel bounded_affine()
{
    ParametricModel m;
    m.name = "bounded_affine";
    m.dim = 1;
    m.f = [](int t, const Vector& x, double l) {
        Vector y = 0.5 * x;
        if (t == 0) {
            y(0) += l;
        }
        return y;
    };
    m.df = [](int, const Vector&, double) { return Matrix::Constant(1, 1, 0.5); };
    m.omega = {Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)};
    return m;
}

}  // namespace

TEST_CASE("residual of an exact solution vanishes")
{
    const BuiltinModel m = build_model("transcritical");
    const Window w = default_window(m);
    const TruncatedSequence phi = oracle_seed(m, 0.7, w);
    CHECK(sup_norm(residual(m.model, phi, 0.7)) < 1e-14);
    CHECK(sup_norm(residual(m.model, phi, 0.8)) > 1e-3);
}

TEST_CASE("sparse Jacobian matches central differences")
{
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (const std::string& name : builtin_names()) {
        const BuiltinModel m = build_model(name);
        const Window w(-6, 6);
        TruncatedSequence phi = TruncatedSequence::zeros(w, m.model.dim);
        for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
            Vector x(m.model.dim);
            for (int i = 0; i < m.model.dim; ++i) {
                x(i) = u(gen);
            }
            phi.set(t, x);
        }
        const double lambda = m.model.lambda_star + u(gen);
        const Matrix dense = Matrix(jacobian(m.model, phi, lambda));
        const Matrix fd = oracle::fd_jacobian(m.model, phi, lambda);
        const double err = (dense - fd).cwiseAbs().maxCoeff() / std::max(1.0, dense.cwiseAbs().maxCoeff());
        INFO(name);
        CHECK(err <= 1e-5);
        // the parameter derivative as well
        const Vector dl = residual_dlambda(m.model, phi, lambda);
        const double h = 1e-6;
        const Vector fdl = (residual(m.model, phi, lambda + h).flat() - residual(m.model, phi, lambda - h).flat()) / (2 * h);
        CHECK((dl - fdl).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, dl.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("builtin models pass the sampled sanity checks")
{
    for (const std::string& name : builtin_names()) {
        const BuiltinModel m = build_model(name);
        const ModelCheck c = validate_model(m.model, default_window(m));
        INFO(name);
        CHECK(c.ok);
    }
}

TEST_CASE("affine model: one Newton step reproduces the Green's function formula")
{
    const BuiltinModel m = build_model("scalar_affine");
    const Window w = default_window(m);
    const double lambda = 1.7;
    const NewtonResult r = newton_solve(m.model, TruncatedSequence::zeros(w, 1), lambda);
    CHECK(r.diagnostics.iterations <= 2);
    CHECK(r.diagnostics.final_residual <= 1e-12);
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        CHECK(std::abs(r.phi.at(t)(0) - lambda * oracle::scalar_green(0.5, t, 1)) <= 1e-12);
    }
}

TEST_CASE("transcritical: Newton converges quadratically to the closed form")
{
    const BuiltinModel m = build_model("transcritical");
    const Window w = default_window(m);
    for (double lambda : {0.1, 0.5, 1.0, 2.0}) {
        TruncatedSequence phi = oracle_seed(m, lambda, w);
        for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
            phi.set(t, 1.3 * phi.at(t));
        }
        const NewtonResult r = newton_solve(m.model, phi, lambda);
        CHECK(r.diagnostics.iterations <= 7);
        CHECK(vec_norm(r.phi.at(0) - oracle::transcritical_xi(0.5, 1.0, lambda)) <= 1e-9);
        const auto& h = r.diagnostics.residual_history;
        REQUIRE(h.size() >= 3);
        // superlinear decrease over the last steps
        CHECK(h[h.size() - 1] <= 1e-3 * h[h.size() - 3] + 1e-12);
        CHECK(std::max(r.diagnostics.tail_minus, r.diagnostics.tail_plus) <= 1e-10);
    }
}

TEST_CASE("projected boundary conditions find the same solution")
{
    const BuiltinModel m = build_model("transcritical");
    const Window w = default_window(m);
    NewtonSettings ns;
    ns.bc = BcMode::Projected;
    const NewtonResult r = newton_solve(m.model, oracle_seed(m, 0.9, w), 0.9, ns);
    CHECK(vec_norm(r.phi.at(0) - oracle::transcritical_xi(0.5, 1.0, 0.9)) <= 1e-9);
    CHECK(parse_bc_mode("projected") == BcMode::Projected);
    CHECK_THROWS_AS(parse_bc_mode("periodic"), std::invalid_argument);
}

TEST_CASE("a short window is grown until the tails are small")
{
    const BuiltinModel m = build_model("transcritical");
    const NewtonResult r = newton_solve(m.model, oracle_seed(m, 1.0, Window::symmetric(12)), 1.0);
    CHECK(r.diagnostics.window_growths >= 1);
    CHECK(r.phi.window().length() > 25);
    CHECK(vec_norm(r.phi.at(0) - oracle::transcritical_xi(0.5, 1.0, 1.0)) <= 1e-9);

    NewtonSettings ns;
    ns.max_window_growths = 0;
    const NewtonResult s = newton_solve(m.model, oracle_seed(m, 1.0, Window::symmetric(12)), 1.0, ns);
    CHECK(s.diagnostics.window_growths == 0);
    CHECK(std::max(s.diagnostics.tail_minus, s.diagnostics.tail_plus) > ns.tail_tol);
    CHECK(std::find(s.diagnostics.warnings.begin(), s.diagnostics.warnings.end(),
                    "solution tails exceed tail_tol on the largest window") != s.diagnostics.warnings.end());
}

TEST_CASE("piecewise linear model: lambda != 0 only has the zero homoclinic")
{
    const BuiltinModel m = build_model("pw_linear");
    const Window w = default_window(m);
    for (unsigned seed = 0; seed < 10; ++seed) {
        std::mt19937 gen(seed);
        std::uniform_real_distribution<double> u(-0.1, 0.1);
        TruncatedSequence phi = TruncatedSequence::zeros(w, 2);
        for (int t = -5; t <= 5; ++t) {
            phi.set(t, Vector::NullaryExpr(2, [&](Eigen::Index) { return u(gen); }));
        }
        const NewtonResult r = newton_solve(m.model, phi, 1.0);
        CHECK(sup_norm(r.phi) <= 1e-10);
    }
}

TEST_CASE("hyperbolicity report")
{
    const BuiltinModel tc = build_model("transcritical");
    const Window w = default_window(tc);
    const HyperbolicityReport ok = hyperbolicity_report(tc.model, oracle_seed(tc, 0.5, w), 0.5);
    CHECK(ok.hypotheses_hold());
    REQUIRE(ok.index.has_value());
    CHECK(*ok.index == 0);

    const BuiltinModel pw = build_model("pw_linear");
    const HyperbolicityReport at0 = hyperbolicity_report(pw.model, TruncatedSequence::zeros(w, 2), 0.0);
    CHECK_FALSE(at0.one_not_in_sigma);
    CHECK(at0.one_not_in_sigma_plus);
    CHECK(at0.one_not_in_sigma_minus);
}

TEST_CASE("leaving the domain is reported with its time index")
{
    const ParametricModel m = bounded_affine();
    TruncatedSequence phi = TruncatedSequence::zeros(Window::symmetric(10), 1);
    phi.set(3, Vector::Constant(1, 5.0));
    try {
        (void)residual(m, phi, 0.1);
        FAIL("expected a domain violation");
    } catch (const DomainViolation& e) {
        CHECK(e.time_index() == 3);
    }
    // inside the box the solve works
    const NewtonResult r = newton_solve(m, TruncatedSequence::zeros(Window::symmetric(40), 1), 1.0);
    CHECK(r.phi.at(1)(0) == doctest::Approx(1.0));
}

TEST_CASE("settings validation")
{
    NewtonSettings ns;
    ns.residual_tol = -1.0;
    CHECK_THROWS_AS(ns.validate(), std::invalid_argument);
    const BuiltinModel m = build_model("scalar_affine");
    NewtonSettings bad;
    bad.window_growth_factor = 0.5;
    CHECK_THROWS_AS((void)newton_solve(m.model, TruncatedSequence::zeros(Window::symmetric(5), 1), 1.0, bad),
                    std::invalid_argument);
}
