#include <doctest.h>

#include "homocont/seqspace.hpp"

#include <random>
#include <sstream>

using namespace homocont;

namespace {

TruncatedSequence random_sequence(unsigned seed, Window w, int d)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    TruncatedSequence phi = TruncatedSequence::zeros(w, d);
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        Vector x(d);
        for (int i = 0; i < d; ++i) {
            x(i) = u(gen);
        }
        phi.set(t, x);
    }
    return phi;
}

}  // namespace

TEST_CASE("max norm and induced operator norm")
{
    Vector x(3);
    x << 1.0, -4.0, 2.5;
    CHECK(vec_norm(x) == 4.0);
    Matrix a(2, 2);
    a << 1.0, -2.0, 0.5, 0.25;
    CHECK(op_norm(a) == doctest::Approx(3.0));
}

TEST_CASE("windows reject degenerate ranges")
{
    CHECK_THROWS_AS(Window(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(Window(3, -3), std::invalid_argument);
    const Window w = Window::symmetric(10);
    CHECK(w.length() == 21);
    const Window g = w.grown(1.5);
    CHECK(g.length() >= 31);
    CHECK(g.contains(-10));
    CHECK(g.contains(10));
    CHECK_THROWS_AS(w.grown(1.0), std::invalid_argument);
}

TEST_CASE("sequences are zero outside their window")
{
    const TruncatedSequence phi = random_sequence(1, Window(-3, 4), 2);
    CHECK(phi.at(-4).isZero());
    CHECK(phi.at(5).isZero());
    CHECK_THROWS_AS(TruncatedSequence(Window(-3, 4), 0), std::invalid_argument);
    TruncatedSequence psi = phi;
    CHECK_THROWS_AS(psi.set(10, Vector::Zero(2)), std::out_of_range);
    CHECK_THROWS_AS(psi.set(0, Vector::Zero(3)), std::invalid_argument);
    Vector bad = Vector::Zero(2);
    bad(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(psi.set(0, bad), std::invalid_argument);
}

TEST_CASE("flat round trip and restriction")
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        const TruncatedSequence phi = random_sequence(seed, Window(-5, 6), 3);
        const TruncatedSequence back = TruncatedSequence::from_flat(phi.window(), 3, phi.flat());
        CHECK(back.values() == phi.values());
        const TruncatedSequence wide = phi.restricted_to(Window(-9, 9));
        for (int t = -9; t <= 9; ++t) {
            CHECK(wide.at(t) == phi.at(t));
        }
        const TruncatedSequence narrow = phi.restricted_to(Window(-2, 2));
        CHECK(narrow.at(3).isZero());
        CHECK(narrow.at(2) == phi.at(2));
    }
}

TEST_CASE("shift is a sup-norm isometry")
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        const TruncatedSequence phi = random_sequence(seed, Window(-7, 3), 2);
        for (int l : {-5, -1, 0, 2, 9}) {
            const TruncatedSequence psi = shift(phi, l);
            CHECK(sup_norm(psi) == sup_norm(phi));
            CHECK(psi.at(0) == phi.at(l));
        }
    }
}

TEST_CASE("decay envelope reports the violation nearest to zero")
{
    TruncatedSequence phi = TruncatedSequence::zeros(Window::symmetric(10), 1);
    for (int t = -10; t <= 10; ++t) {
        phi.set(t, Vector::Constant(1, std::pow(0.5, std::abs(t))));
    }
    CHECK(check_envelope(phi, DecayEnvelope(1.0, 0.5)).holds);
    phi.set(-6, Vector::Constant(1, 0.5));
    phi.set(6, Vector::Constant(1, 0.5));
    phi.set(8, Vector::Constant(1, 0.5));
    const EnvelopeCheck c = check_envelope(phi, DecayEnvelope(1.0, 0.5));
    CHECK_FALSE(c.holds);
    REQUIRE(c.first_violation.has_value());
    CHECK(*c.first_violation == -6);
    CHECK_THROWS_AS(DecayEnvelope(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("CSV round trip is exact")
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        const TruncatedSequence phi = random_sequence(seed, Window(-4, 5), 1 + seed % 3);
        std::stringstream s;
        write_csv(s, phi);
        const TruncatedSequence back = read_csv(s);
        CHECK(back.window() == phi.window());
        CHECK(back.values() == phi.values());
    }
    std::stringstream bad("t,x1\n0,1\n2,1\n3,1\n");
    CHECK_THROWS(read_csv(bad));
}
