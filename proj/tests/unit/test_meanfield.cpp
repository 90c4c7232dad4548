#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "rap/error.hpp"
#include "rap/meanfield.hpp"
#include "support/oracles.hpp"

using namespace rap;
using std::numbers::pi;
using K = SurfaceModelKind;

namespace {

struct Expected {
    K model;
    int d;
    double lambda1;
    double gamma;
    std::map<double, double> lambdas;
    std::map<double, double> amplitudes;
};

// Table 1 and the amplitude ratios printed alongside each closed system.
const std::vector<Expected> kTable = {
    {K::UniformDistribution, 2, 0.3789, 2.6101, {{2.0, -0.2421}}, {}},
    {K::UniformDistribution, 3, 0.6313, 3.7119, {{2.0, 0.2625}, {3.0, -0.1062}}, {{2.0, 2.336}}},
    {K::UniformDistribution, 4, 0.7369, 4.8002, {{2.0, 0.4737}, {3.0, 0.2106}, {4.0, -0.0526}},
     {{2.0, 1.6428}, {3.0, 4.6867}}},
    {K::IdenticalTwins, 2, 0.3614, 2.5660, {{2.0, -0.2771}}, {{0.5, 0.7981}, {2.0, 0.8188}}},
    {K::IdenticalTwins, 3, 0.6285, 3.6921, {{2.0, 0.2571}, {3.0, -0.1144}}, {{2.0, 2.4071}, {3.0, 6.6972}}},
    {K::IdenticalTwins, 4, 0.7362, 4.7909, {{2.0, 0.4724}, {3.0, 0.2086}, {4.0, -0.0552}},
     {{1.5, 1.2208}, {2.0, 1.6611}, {3.0, 4.8320}, {4.0, 26.522}}},
};

}  // namespace

TEST_CASE("solved exponents reproduce the published table") {
    for (const auto& e : kTable) {
        CAPTURE(to_string(e.model));
        CAPTURE(e.d);
        const MeanFieldSolution s = solve_exponents(e.model, e.d);
        CHECK(std::abs(s.lambda1 - e.lambda1) < 5e-4);
        CHECK(std::abs(s.gamma - e.gamma) < 5e-4);
        for (const auto& [alpha, value] : e.lambdas) CHECK(std::abs(s.lambdas.at(alpha) - value) < 5e-4);
        for (const auto& [alpha, value] : e.amplitudes) {
            CHECK(std::abs(s.amplitudes.at(alpha) / value - 1.0) < 5e-4);
        }
        CHECK(s.residual_norm < 1e-10);
        CHECK(s.lambda1 > 0.0);
        CHECK(s.lambda1 < (e.d - 1.0) / e.d);
        for (const auto& [alpha, l] : s.lambdas) CHECK(l == lambda_alpha(alpha, s.lambda1));
        CHECK(s.lambdas.at(static_cast<double>(e.d)) < 0.0);
    }
}

TEST_CASE("2d uniform model against its closed form") {
    const double closed = std::numbers::e * std::sqrt(pi) / 2.0 * std::erfc(1.0);
    CHECK(ud2_lambda1_closed_form() == doctest::Approx(closed).epsilon(1e-15));
    const MeanFieldSolution s = solve_exponents(K::UniformDistribution, 2);
    CHECK(std::abs(s.lambda1 - closed) < 1e-8);
    CHECK(std::abs(s.gamma - (1.0 + 2.0 / (2.0 - std::numbers::e * std::sqrt(pi) * std::erfc(1.0)))) < 1e-8);
    CHECK(s.amplitudes.at(2.0) == doctest::Approx(1.0));
}

TEST_CASE("solutions are gauge invariant") {
    for (K model : {K::UniformDistribution, K::IdenticalTwins}) {
        for (int d = 2; d <= 4; ++d) {
            const MeanFieldSolution a = solve_exponents(model, d);
            const MeanFieldSolution b = solve_exponents(model, d, {.gauge_scale = 3.7});
            CHECK(std::abs(a.lambda1 - b.lambda1) < 1e-10);
            for (const auto& [alpha, v] : a.amplitudes) CHECK(b.amplitudes.at(alpha) == doctest::Approx(v).epsilon(1e-8));
            // residuals are unchanged by m_alpha -> s^alpha m_alpha
            const ClosedSystem sys = closed_system(model, d);
            MomentMap unit, scaled;
            for (double alpha : sys.amplitude_orders) {
                unit[alpha] = a.amplitudes.at(alpha);
                scaled[alpha] = a.amplitudes.at(alpha) * std::pow(2.5, alpha);
            }
            unit[1.0] = 1.0;
            scaled[1.0] = 2.5;
            const auto r1 = sys.residuals(a.lambda1, unit);
            const auto r2 = sys.residuals(a.lambda1, scaled);
            for (std::size_t i = 0; i < r1.size(); ++i) CHECK(std::abs(r1[i] - r2[i]) < 1e-10);
        }
    }
}

TEST_CASE("3d identical twins satisfy the normalization closure") {
    const MeanFieldSolution s = solve_exponents(K::IdenticalTwins, 3);
    CHECK(it3_closure_deviation(s) < 1e-6);
}

TEST_CASE("the generic surface builder reproduces every transcribed exponent") {
    const std::map<double, double> trial{{0.5, 0.83}, {1.0, 1.0}, {1.5, 1.31}, {2.0, 1.7}, {3.0, 5.2}, {4.0, 27.0}};
    for (K model : {K::UniformDistribution, K::IdenticalTwins}) {
        for (int d = 2; d <= 4; ++d) {
            CAPTURE(d);
            const ClosedSystem sys = closed_system(model, d);
            MomentMap unknowns{{1.0, 1.0}};
            for (double alpha : sys.amplitude_orders) unknowns[alpha] = trial.at(alpha);
            const MomentMap full = sys.complete_amplitudes(unknowns);
            const ExponentPolynomial transcribed = sys.exponent(full);
            const ExponentPolynomial generic = generic_exponent(model, d, full);
            REQUIRE(transcribed.terms().size() == generic.terms().size());
            for (std::size_t i = 0; i < generic.terms().size(); ++i) {
                CHECK(generic.terms()[i].power == transcribed.terms()[i].power);
                CHECK(generic.terms()[i].coeff == doctest::Approx(transcribed.terms()[i].coeff).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("surface coefficients") {
    const MomentMap m{{0.5, 3.0}, {1.0, 5.0}, {1.5, 7.0}, {2.0, 11.0}, {3.0, 13.0}};
    const double n = 100.0;
    SUBCASE("2d uniform: perimeters at distance r") {
        const auto s = surface_coefficients(K::UniformDistribution, 2, m, n);
        CHECK(s.terms().size() == 2);
        CHECK(s.coefficient(0.0) == doctest::Approx(2.0 * pi * 5.0));
        CHECK(s.coefficient(1.0) == doctest::Approx(2.0 * pi * n));
    }
    SUBCASE("2d twins subtract 2 sqrt2 M_1/2 at power 1/2") {
        const auto s = surface_coefficients(K::IdenticalTwins, 2, m, n);
        CHECK(s.coefficient(0.5) == doctest::Approx(-2.0 * std::sqrt(2.0) * 3.0));
    }
    SUBCASE("3d twins merge the correction into s_1") {
        const auto s = surface_coefficients(K::IdenticalTwins, 3, m, n);
        CHECK(s.terms().size() == 3);
        CHECK(s.coefficient(1.0) == doctest::Approx(6.0 * pi * 5.0));
        CHECK(s.coefficient(0.0) == doctest::Approx(4.0 * pi * 11.0));
    }
    SUBCASE("4d twins carry a half-integer term") {
        const auto s = surface_coefficients(K::IdenticalTwins, 4, m, n);
        const double v4 = pi * pi / 2.0;
        CHECK(s.coefficient(1.5) == doctest::Approx(-16.0 * std::sqrt(2.0) / (3.0 * pi) * v4 * 7.0));
        CHECK(s.coefficient(2.0) == doctest::Approx(4.0 * v4 * 3.0 * 5.0));
    }
    SUBCASE("affine keeps s_0 only") {
        const auto s = surface_coefficients(K::AffineRef22, 3, m, n);
        CHECK(s.terms().size() == 1);
        CHECK(s.coefficient(0.0) == doctest::Approx(4.0 * pi * 11.0));
    }
    CHECK_THROWS_AS(surface_coefficients(K::IdenticalTwins, 2, MomentMap{{1.0, 1.0}}, n), PreconditionError);
    CHECK(required_moment_orders(K::IdenticalTwins, 4) == std::vector<double>{1.0, 1.5, 2.0, 3.0});
    CHECK(required_moment_orders(K::UniformDistribution, 2) == std::vector<double>{1.0});
}

TEST_CASE("insertion cdf solves its differential equation") {
    // dP/dr = -S(r) P / pore, integrated independently with RK4 in t = sqrt(r)
    // so the half-integer powers stay smooth
    const MomentMap m{{0.5, 40.0}, {1.0, 30.0}, {2.0, 25.0}};
    for (K model : {K::UniformDistribution, K::IdenticalTwins}) {
        const auto s = surface_coefficients(model, 2, m, 1000.0);
        const double pore = 700.0;
        auto g = [&](long double t, long double p) {
            return -2.0L * t * static_cast<long double>(s(static_cast<double>(t * t))) * p / pore;
        };
        for (double r : {0.01, 0.1, 0.3, 0.6}) {
            const long double oracle = oracle::rk4(g, 0.0L, 1.0L, std::sqrt(static_cast<long double>(r)), 20000);
            CHECK(std::abs(insertion_cdf(s, pore, r) - static_cast<double>(oracle)) < 1e-10);
        }
    }
    CHECK(insertion_cdf(ExponentPolynomial{{0.0, 3.0}}, 2.0, 0.7) == doctest::Approx(std::exp(-3.0 * 0.7 / 2.0)));
}

TEST_CASE("insertion cdf is normalized") {
    const std::vector<ExponentPolynomial> surfaces = {
        {{0.0, 2.0}, {1.0, 5.0}},
        {{0.0, 1.0}, {0.5, -0.4}, {1.0, 3.0}},
        {{0.0, 0.3}, {1.0, 2.0}, {1.5, -0.9}, {2.0, 4.0}, {3.0, 1.0}},
    };
    for (const auto& s : surfaces) {
        for (double pore : {0.5, 3.0}) {
            CHECK(insertion_cdf(s, pore, 0.0) == 1.0);
            const ExponentPolynomial q = s.integral_over(pore);
            double hi = 1.0;
            while (q(hi) < 50.0) hi *= 2.0;
            const long double mass = oracle::integrate(
                [&](long double r) {
                    const double x = static_cast<double>(r);
                    return static_cast<long double>(s(x) / pore * insertion_cdf(s, pore, x));
                },
                0.0L, hi, 1e-15L);
            CHECK(std::abs(static_cast<double>(mass) - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("model validity is flagged") {
    const ExponentPolynomial bad{{0.0, -1.0}, {1.0, 1.0}};
    CHECK_THROWS_AS(insertion_cdf(bad, 1.0, 0.5), ModelValidityError);
    CHECK_THROWS_AS(insertion_cdf(bad, 0.0, 0.5), DomainError);
}

TEST_CASE("affine cdf") {
    CHECK(insertion_cdf_affine(2.0, 10.0, 0.0) == 1.0);
    CHECK(insertion_cdf_affine(2.0, 10.0, 5.0) == 0.0);
    CHECK(insertion_cdf_affine(2.0, 10.0, 7.0) == 0.0);
    // first-order agreement with the exponential at small r
    const double r = 1e-4;
    CHECK(std::abs(insertion_cdf_affine(2.0, 10.0, r) - insertion_cdf(ExponentPolynomial{{0.0, 2.0}}, 10.0, r)) < 1e-8);
    CHECK_THROWS_AS(insertion_cdf_affine(0.0, 1.0, 0.1), DomainError);
}

TEST_CASE("moment integral identities") {
    CHECK(moment_integral(1.0, ExponentPolynomial{{1.0, 1.0}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moment_integral(2.0, ExponentPolynomial{{2.0, 1.0}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moment_integral(1.0, ExponentPolynomial{{1.0, 2.0}, {2.0, 1.0}}) ==
          doctest::Approx(ud2_lambda1_closed_form()).epsilon(1e-12));
    CHECK(std::abs(moment_integral(1.0, ExponentPolynomial{{1.0, 2.0}, {2.0, 1.0}}) - 0.3789) < 5e-5);
    // alpha int x^(alpha-1) e^(-x) = Gamma(alpha + 1), including the singular alpha < 1
    for (double alpha : {0.25, 0.5, 1.5, 3.0, 4.0}) {
        CHECK(moment_integral(alpha, ExponentPolynomial{{1.0, 1.0}}) ==
              doctest::Approx(std::tgamma(alpha + 1.0)).epsilon(1e-12));
    }
    // fractional powers: x^(3/2) alone gives Gamma(1 + alpha/1.5)
    CHECK(moment_integral(1.0, ExponentPolynomial{{1.5, 1.0}}) == doctest::Approx(std::tgamma(1.0 + 1.0 / 1.5)).epsilon(1e-12));
    CHECK_THROWS_AS(moment_integral(1.0, ExponentPolynomial{{1.0, -1.0}}), DomainError);
    CHECK_THROWS_AS(moment_integral(0.0, ExponentPolynomial{{1.0, 1.0}}), DomainError);
}

TEST_CASE("lambda and gamma relations") {
    CHECK(lambda_alpha(1.0, 0.3789) == 0.3789);
    CHECK(std::abs(lambda_alpha(2.0, 0.3789) - (-0.2421)) < 2e-4);
    CHECK(std::abs(fractal_dimension(0.3789, 1.0) - 2.6101) < 5e-4);
    const double l1 = 0.36;
    CHECK(fractal_dimension(lambda_alpha(2.0, l1), 2.0) == doctest::Approx(fractal_dimension(l1, 1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(fractal_dimension(1.0, 1.0), DomainError);
}

TEST_CASE("reference gammas at printed precision") {
    const double abk[] = {2.554, 3.945, 4.999};
    const double ref22[] = {2.75, 3.8, 4.83};
    for (int d = 2; d <= 4; ++d) {
        const auto g = reference_gammas(d);
        CHECK(std::abs(g.abk - abk[d - 2]) < 5e-4);
        CHECK(std::abs(g.ref22 - ref22[d - 2]) < 5e-3);
    }
    CHECK_THROWS_AS(reference_gammas(5), DomainError);
}

TEST_CASE("model names") {
    CHECK(parse_surface_model("UD") == K::UniformDistribution);
    CHECK(parse_surface_model("it") == K::IdenticalTwins);
    CHECK(parse_surface_model("Affine") == K::AffineRef22);
    CHECK(to_string(K::IdenticalTwins) == "IT");
    CHECK_THROWS_AS(parse_surface_model("foo"), ParseError);
    CHECK_THROWS_AS(closed_system(K::AffineRef22, 2), DomainError);
    CHECK_THROWS_AS(solve_exponents(K::IdenticalTwins, 5), DomainError);
}

TEST_CASE("exponent polynomial bookkeeping") {
    ExponentPolynomial p{{2.0, 1.0}, {0.0, 3.0}};
    p.add(2.0, 0.5);
    p.add(0.5, -1.0);
    REQUIRE(p.terms().size() == 3);
    CHECK(p.terms()[0].power == 0.0);
    CHECK(p.terms()[1].power == 0.5);
    CHECK(p.coefficient(2.0) == 1.5);
    CHECK(p.leading().power == 2.0);
    CHECK(p.has_fractional_powers());
    CHECK(p(4.0) == doctest::Approx(3.0 - 2.0 + 24.0));
    const auto q = p.integral_over(2.0);
    CHECK(q.coefficient(1.0) == doctest::Approx(1.5));
    CHECK(q.coefficient(3.0) == doctest::Approx(0.25));
}
