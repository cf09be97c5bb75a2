#include <doctest.h>

#include "oracles.hpp"

#include "homocont/admiss.hpp"
#include "homocont/models.hpp"

using namespace homocont;

namespace {

LinearSystem scalar(double a)
{
    return LinearSystem::autonomous(Matrix::Constant(1, 1, a));
}

}  // namespace

TEST_CASE("kappa: closed form against the truncated series")
{
    for (double alpha : {0.2, 0.5, 0.9}) {
        for (double p : {1.5, 2.0, 3.0}) {
            for (double K : {1.0, 2.5}) {
                CHECK(kappa_closed_form(K, alpha, p) ==
                      doctest::Approx(oracle::kappa_series(K, alpha, p, 4000)).epsilon(1e-12));
            }
        }
    }
    CHECK(kappa_closed_form(1.0, 0.5, 2.0) == doctest::Approx(0.645497).epsilon(1e-6));
    CHECK_THROWS_AS((void)kappa_closed_form(1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("kappa from the Green's function of a scalar contraction")
{
    // sum_{k >= 0} (0.5^k)^2 = 4/3
    const LinearSystem a = scalar(0.5);
    const Window w = Window::symmetric(40);
    const DichotomyReport rep = detect_ed(a, Interval::Z, w);
    CHECK(kappa_green_sum(a, rep, 2.0, w) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("Green's function of scalar systems")
{
    const Window w = Window::symmetric(40);
    const LinearSystem a = scalar(0.5);
    const DichotomyReport rep = detect_ed(a, Interval::Z, w);
    for (int t = -4; t <= 4; ++t) {
        for (int s = -4; s <= 4; ++s) {
            CHECK(green_function(a, rep, t, s)(0, 0) == doctest::Approx(oracle::scalar_green(0.5, t, s)));
        }
    }
    // expanding: G(t, s) = -2^{t-s} for s > t
    const LinearSystem b = scalar(2.0);
    const DichotomyReport rb = detect_ed(b, Interval::Z, w);
    CHECK(green_function(b, rb, 1, 3)(0, 0) == doctest::Approx(-0.25));
    CHECK(green_function(b, rb, 3, 1)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("semilinear criterion reports both bounds")
{
    const LinearSystem a = scalar(0.5);
    const AdmissibilityCertificate ok = check_semilinear(a, 0.2);
    CHECK(ok.verified);
    CHECK(ok.numbers.at("standard_bound") == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(ok.numbers.at("printed_bound") == doctest::Approx(2.0).epsilon(1e-6));
    const AdmissibilityCertificate mid = check_semilinear(a, 0.4);
    CHECK_FALSE(mid.verified);
    CHECK(mid.reason.find("printed bound only") != std::string::npos);
    const AdmissibilityCertificate bad = check_semilinear(a, 3.0);
    CHECK_FALSE(bad.verified);
    CHECK_FALSE(check_semilinear(scalar(1.0), 0.1).verified);
}

TEST_CASE("asymptotically linear criterion")
{
    const LinearSystem a = scalar(0.5);
    AsymLinearData data;
    data.p = 2.0;
    data.rho_q = 0.1;
    data.mu_q = 0.1;
    data.lambda_q = 0.2;
    const AdmissibilityCertificate c = check_asymptotically_linear(a, data);
    CHECK(c.verified);
    CHECK(c.numbers.at("kappa_closed_form") == doctest::Approx(0.645497).epsilon(1e-5));
    CHECK(c.numbers.at("kappa") >= c.numbers.at("kappa_closed_form"));
    data.rho_q = 0.5;
    CHECK_FALSE(check_asymptotically_linear(a, data).verified);
    data.p = 1.0;
    CHECK_THROWS_AS((void)check_asymptotically_linear(a, data), std::invalid_argument);
}

TEST_CASE("periodic Floquet criterion")
{
    CHECK(check_periodic_floquet({Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.5)}).verified);
    CHECK_FALSE(check_periodic_floquet({Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 0.5)}).verified);
}

TEST_CASE("Beverton-Holt limits are contractive on both sides")
{
    const BuiltinModel m = build_model("beverton_holt");
    const auto [minus, plus] = check_limit_admissibility(m.model, 0.0);
    CHECK(minus.criterion == Criterion::Contractive);
    CHECK(plus.criterion == Criterion::Contractive);
    CHECK(minus.verified);
    CHECK(plus.verified);
    // a^- = (0.8): single factor; a^+ = (0.5, 1.5): the two-step product 0.75
    CHECK(minus.lhs == doctest::Approx(0.8));
    CHECK(plus.lhs == doctest::Approx(0.75));
    const LimitSystem lim = LimitSystem::from_side(*m.model.plus, 1, 0.0);
    CHECK(sampled_lipschitz_ratio(lim) <= 1.0);
}

TEST_CASE("Beverton-Holt with a product at or above one is not certified")
{
    ModelParams p;
    p.tables["a_plus"] = {0.9, 1.2};
    const BuiltinModel m = build_model("beverton_holt", p);
    const auto [minus, plus] = check_limit_admissibility(m.model, 0.0);
    CHECK(minus.verified);
    CHECK_FALSE(plus.verified);
}

TEST_CASE("every builtin has certified limits")
{
    for (const auto& name : builtin_names()) {
        const BuiltinModel m = build_model(name);
        const auto [minus, plus] = check_limit_admissibility(m.model, m.model.lambda_star);
        INFO(name << ": " << minus.reason << " / " << plus.reason);
        CHECK(minus.verified);
        CHECK(plus.verified);
    }
    const BuiltinModel tc = build_model("transcritical");
    CHECK(check_limit_admissibility(tc.model, 0.5).first.criterion == Criterion::Triangular);
}

TEST_CASE("models without limit systems get no certificate")
{
    BuiltinModel m = build_model("scalar_affine");
    m.model.plus.reset();
    CHECK_THROWS_AS((void)check_limit_admissibility(m.model, 0.0), std::invalid_argument);
}
