#include "rap/meanfield.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rap/error.hpp"
#include "rap/geometry.hpp"

namespace rap {

namespace {

using std::numbers::pi;

constexpr double kTailExponent = 46.0;  // exp(-46) < 1e-20

double binomial(int n, int k) {
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

double lookup(const MomentMap& m, double order, std::string_view what) {
    const auto it = m.find(order);
    if (it == m.end()) {
        throw PreconditionError(std::string(what) + " of order " + std::to_string(order) + " is missing");
    }
    return it->second;
}

bool is_fractional(double p) { return p != std::floor(p); }

}  // namespace

std::string_view to_string(SurfaceModelKind kind) {
    switch (kind) {
        case SurfaceModelKind::UniformDistribution: return "UD";
        case SurfaceModelKind::IdenticalTwins: return "IT";
        case SurfaceModelKind::AffineRef22: return "affine";
    }
    return "?";
}

SurfaceModelKind parse_surface_model(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "ud" || lower == "uniform") return SurfaceModelKind::UniformDistribution;
    if (lower == "it" || lower == "twins") return SurfaceModelKind::IdenticalTwins;
    if (lower == "affine" || lower == "ref22") return SurfaceModelKind::AffineRef22;
    throw ParseError("unknown surface model '" + std::string(text) + "' (expected ud, it or affine)");
}

// ---------------------------------------------------------------------------
// ExponentPolynomial

ExponentPolynomial::ExponentPolynomial(std::span<const Term> terms) {
    for (const auto& t : terms) add(t.power, t.coeff);
}

ExponentPolynomial::ExponentPolynomial(std::initializer_list<Term> terms)
    : ExponentPolynomial(std::span<const Term>(terms.begin(), terms.size())) {}

void ExponentPolynomial::add(double power, double coeff) {
    if (!(power >= 0.0) || !std::isfinite(power) || !std::isfinite(coeff)) {
        throw DomainError("polynomial terms need a finite power >= 0 and a finite coefficient");
    }
    auto it = std::lower_bound(terms_.begin(), terms_.end(), power,
                               [](const Term& t, double p) { return t.power < p; });
    if (it != terms_.end() && it->power == power) {
        it->coeff += coeff;
    } else {
        terms_.insert(it, Term{power, coeff});
    }
}

double ExponentPolynomial::operator()(double x) const {
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.coeff * (t.power == 0.0 ? 1.0 : std::pow(x, t.power));
    return sum;
}

double ExponentPolynomial::coefficient(double power) const {
    for (const auto& t : terms_) {
        if (t.power == power) return t.coeff;
    }
    return 0.0;
}

const ExponentPolynomial::Term& ExponentPolynomial::leading() const {
    if (terms_.empty()) throw DomainError("empty polynomial has no leading term");
    return terms_.back();
}

bool ExponentPolynomial::has_fractional_powers() const {
    return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) { return is_fractional(t.power); });
}

ExponentPolynomial ExponentPolynomial::integral_over(double scale) const {
    ExponentPolynomial out;
    for (const auto& t : terms_) out.add(t.power + 1.0, t.coeff / ((t.power + 1.0) * scale));
    return out;
}

// ---------------------------------------------------------------------------
// Surface models and insertion probability

std::vector<double> required_moment_orders(SurfaceModelKind model, int d) {
    std::vector<double> orders;
    if (model == SurfaceModelKind::AffineRef22) {
        orders.push_back(d - 1.0);
        return orders;
    }
    for (int k = 0; k < d - 1; ++k) orders.push_back(d - 1.0 - k);
    if (model == SurfaceModelKind::IdenticalTwins) orders.push_back(0.5 * (d - 1));
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    return orders;
}

ExponentPolynomial surface_coefficients(SurfaceModelKind model, int d, const MomentMap& moments, double n) {
    if (d < 2) throw DomainError("surface model requires d >= 2");
    auto moment = [&](double order) { return order == 0.0 ? n : lookup(moments, order, "moment"); };

    const double area = d * unit_ball_volume(d);
    ExponentPolynomial s;
    if (model == SurfaceModelKind::AffineRef22) {
        s.add(0.0, area * moment(d - 1.0));
        return s;
    }
    for (int k = 0; k < d; ++k) s.add(k, area * binomial(d - 1, k) * moment(d - 1.0 - k));
    if (model == SurfaceModelKind::IdenticalTwins) {
        const double half = 0.5 * (d - 1);
        const double twin = std::pow(2.0 * pi, half) / std::tgamma(0.5 * (d + 1));
        s.add(half, -twin * moment(half));
    }
    return s;
}

double insertion_cdf(const ExponentPolynomial& surface, double pore, double r) {
    if (!(pore > 0.0)) throw DomainError("pore volume must be positive");
    if (!(r >= 0.0)) throw DomainError("radius must be non-negative");
    const double exponent = surface.integral_over(pore)(r);
    if (exponent < 0.0) {
        throw ModelValidityError("surface model gives an insertion probability above 1 at r = " +
                                 std::to_string(r));
    }
    return std::exp(-exponent);
}

double insertion_log_density(const ExponentPolynomial& surface, double pore, double r) {
    return r * surface(r) / pore * insertion_cdf(surface, pore, r);
}

double insertion_cdf_affine(double s0, double pore, double r) {
    if (!(s0 > 0.0) || !(pore > 0.0)) throw DomainError("affine model needs s0 > 0 and pore > 0");
    return std::max(0.0, 1.0 - s0 * r / pore);
}

double insertion_log_density_affine(double s0, double pore, double r) {
    return insertion_cdf_affine(s0, pore, r) > 0.0 ? s0 * r / pore : 0.0;
}

double moment_integral(double alpha, const ExponentPolynomial& q) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("moment_integral requires alpha > 0");
    if (q.terms().empty() || !(q.leading().coeff > 0.0) || !(q.leading().power > 0.0)) {
        throw DomainError("exponent does not diverge at infinity");
    }

    double x_max = 1.0;
    while (!(q(x_max) >= kTailExponent && q(2.0 * x_max) >= q(x_max))) {
        x_max *= 2.0;
        if (x_max > 1e150) throw DomainError("exponent does not reach the tail cutoff");
    }

    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
    constexpr unsigned kMaxDepth = 20;
    constexpr double kTolerance = 1e-14;
    double error = 0.0;

    if (alpha < 1.0 || q.has_fractional_powers()) {
        // x = t^k with k even, k * alpha >= 1: smooth in t for half-integer powers.
        const double k = 2.0 * std::ceil(1.0 / (2.0 * alpha));
        const double expo = k * alpha - 1.0;
        auto f = [&](double t) {
            const double weight = expo == 0.0 ? 1.0 : std::pow(t, expo);
            return alpha * k * weight * std::exp(-q(std::pow(t, k)));
        };
        return Quadrature::integrate(f, 0.0, std::pow(x_max, 1.0 / k), kMaxDepth, kTolerance, &error);
    }
    auto f = [&](double x) {
        const double weight = alpha == 1.0 ? 1.0 : std::pow(x, alpha - 1.0);
        return alpha * weight * std::exp(-q(x));
    };
    return Quadrature::integrate(f, 0.0, x_max, kMaxDepth, kTolerance, &error);
}

// ---------------------------------------------------------------------------
// Exponents

double lambda_alpha(double alpha, double lambda1) { return alpha * lambda1 - (alpha - 1.0); }

double fractal_dimension(double lambda_alpha, double alpha) {
    if (!(lambda_alpha < 1.0)) throw DomainError("fractal dimension requires lambda_alpha < 1");
    return 1.0 + alpha / (1.0 - lambda_alpha);
}

ReferenceGammas reference_gammas(int d) {
    if (d < 2 || d > 4) throw DomainError("reference gammas are tabulated for d in {2, 3, 4}");
    const double abk = d + 1.0 - d * std::exp(2.0 * (d - std::pow(2.0, d + 1) + 3.0) / (d + 2.0));
    const double ref22 = d + (d + 1.0) / (d + 2.0);
    return {abk, ref22};
}

double ud2_lambda1_closed_form() { return std::numbers::e * std::sqrt(pi) / 2.0 * std::erfc(1.0); }

// ---------------------------------------------------------------------------
// Closed systems

ClosedSystem closed_system(SurfaceModelKind model, int d) {
    using K = SurfaceModelKind;
    if (model == K::UniformDistribution) {
        switch (d) {
            case 2: return {model, d, {1.0}, {}};
            case 3: return {model, d, {1.0, 2.0}, {2.0}};
            case 4: return {model, d, {1.0, 2.0, 3.0}, {2.0, 3.0}};
            default: break;
        }
    } else if (model == K::IdenticalTwins) {
        switch (d) {
            case 2: return {model, d, {0.5, 1.0, 2.0}, {0.5, 2.0}};
            case 3: return {model, d, {1.0, 2.0, 3.0}, {2.0, 3.0}};
            case 4: return {model, d, {1.0, 1.5, 2.0, 3.0, 4.0}, {1.5, 2.0, 3.0, 4.0}};
            default: break;
        }
    }
    throw DomainError("no closed system for model " + std::string(to_string(model)) + " in d = " +
                      std::to_string(d));
}

MomentMap ClosedSystem::complete_amplitudes(const MomentMap& unknowns) const {
    MomentMap m = unknowns;
    const double m1 = lookup(m, 1.0, "amplitude");
    if (model == SurfaceModelKind::UniformDistribution) {
        if (d == 2) m[2.0] = m1 * m1;
        if (d == 3) m[3.0] = 3.0 * m1 * lookup(m, 2.0, "amplitude");
        if (d == 4) {
            const double m2 = lookup(m, 2.0, "amplitude");
            m[4.0] = 4.0 * m1 * lookup(m, 3.0, "amplitude") + 3.0 * m2 * m2;
        }
    }
    return m;
}

ExponentPolynomial ClosedSystem::exponent(const MomentMap& amplitudes) const {
    const MomentMap m = complete_amplitudes(amplitudes);
    auto at = [&](double order) { return lookup(m, order, "amplitude"); };
    const double m1 = at(1.0);

    if (model == SurfaceModelKind::UniformDistribution) {
        if (d == 2) {
            const double den = at(2.0);
            return {{1.0, 2.0 * m1 / den}, {2.0, 1.0 / den}};
        }
        if (d == 3) {
            const double den = 3.0 * m1 * at(2.0);
            return {{1.0, 3.0 * at(2.0) / den}, {2.0, 3.0 * m1 / den}, {3.0, 1.0 / den}};
        }
        const double m2 = at(2.0);
        const double m3 = at(3.0);
        const double den = 4.0 * m1 * m3 + 3.0 * m2 * m2;
        return {{1.0, 4.0 * m3 / den}, {2.0, 6.0 * m2 / den}, {3.0, 4.0 * m1 / den}, {4.0, 1.0 / den}};
    }

    if (d == 2) {
        const double den = at(2.0);
        const double twin = 4.0 * std::numbers::sqrt2 / (3.0 * pi);
        return {{1.0, 2.0 * m1 / den}, {1.5, -twin * at(0.5) / den}, {2.0, 1.0 / den}};
    }
    if (d == 3) {
        const double den = at(3.0);
        return {{1.0, 3.0 * at(2.0) / den}, {2.0, 9.0 * m1 / 4.0 / den}, {3.0, 1.0 / den}};
    }
    const double den = at(4.0);
    const double twin = 32.0 * std::numbers::sqrt2 / (15.0 * pi);
    return {{1.0, 4.0 * at(3.0) / den},
            {2.0, 6.0 * at(2.0) / den},
            {2.5, -twin * at(1.5) / den},
            {3.0, 4.0 * m1 / den},
            {4.0, 1.0 / den}};
}

std::vector<double> ClosedSystem::residuals(double lambda1, const MomentMap& amplitudes) const {
    const MomentMap m = complete_amplitudes(amplitudes);
    const ExponentPolynomial q = exponent(m);
    std::vector<double> out;
    out.reserve(equation_orders.size());
    for (double alpha : equation_orders) {
        const double m_alpha = lookup(m, alpha, "amplitude");
        out.push_back(std::abs(lambda_alpha(alpha, lambda1)) - moment_integral(alpha, q) / m_alpha);
    }
    return out;
}

ExponentPolynomial generic_exponent(SurfaceModelKind model, int d, const MomentMap& amplitudes) {
    const ExponentPolynomial surface = surface_coefficients(model, d, amplitudes, 1.0);
    const double pore = unit_ball_volume(d) * lookup(amplitudes, static_cast<double>(d), "amplitude");
    return surface.integral_over(pore);
}

MeanFieldSolution solve_exponents(SurfaceModelKind model, int d, const SolveOptions& options) {
    const ClosedSystem system = closed_system(model, d);
    const double scale = options.gauge_scale;
    if (!(scale > 0.0)) throw DomainError("gauge scale must be positive");

    const std::size_t n = 1 + system.amplitude_orders.size();
    if (system.equation_orders.size() != n) throw Error("closed system is not square");

    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    x[0] = std::min(options.initial_lambda1.value_or(1.0 - 1.0 / d), (d - 1.0) / d);
    for (std::size_t i = 0; i < system.amplitude_orders.size(); ++i) {
        x[static_cast<Eigen::Index>(i + 1)] = std::pow(scale, system.amplitude_orders[i]);
    }

    auto unpack = [&](const Eigen::VectorXd& v) {
        MomentMap m{{1.0, scale}};
        for (std::size_t i = 0; i < system.amplitude_orders.size(); ++i) {
            m[system.amplitude_orders[i]] = v[static_cast<Eigen::Index>(i + 1)];
        }
        return m;
    };
    // Infeasible points evaluate to +inf so the damping rejects them: non-positive
    // amplitudes, a non-divergent exponent, or lambda_1 past (d-1)/d, where
    // lambda_d turns positive and |lambda_d| admits spurious roots.
    const double upper = (d - 1.0) / d;
    auto evaluate = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                      std::numeric_limits<double>::infinity());
        for (Eigen::Index i = 1; i < v.size(); ++i) {
            if (!(v[i] > 0.0)) return f;
        }
        if (!(v[0] > 0.0 && v[0] <= upper)) return f;
        try {
            const auto r = system.residuals(v[0], unpack(v));
            for (std::size_t i = 0; i < n; ++i) f[static_cast<Eigen::Index>(i)] = r[i];
        } catch (const DomainError&) {
        }
        return f;
    };
    auto norm = [](const Eigen::VectorXd& f) {
        return f.allFinite() ? f.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
    };

    Eigen::VectorXd f = evaluate(x);
    double fnorm = norm(f);
    if (!std::isfinite(fnorm)) throw ConvergenceError("initial guess is infeasible", fnorm);

    int iteration = 0;
    for (; iteration < options.max_iterations && !(fnorm < options.tolerance); ++iteration) {
        Eigen::MatrixXd jac(f.size(), f.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double h = options.jacobian_step * std::max(std::abs(x[j]), 1e-3);
            Eigen::VectorXd xp = x;
            xp[j] += h;
            Eigen::VectorXd fp = evaluate(xp);
            double signed_h = h;
            if (!fp.allFinite()) {
                xp[j] = x[j] - h;
                fp = evaluate(xp);
                signed_h = -h;
            }
            if (!fp.allFinite()) throw ConvergenceError("Jacobian step left the feasible region", fnorm);
            jac.col(j) = (fp - f) / signed_h;
        }
        const Eigen::VectorXd dx = jac.colPivHouseholderQr().solve(-f);

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            const Eigen::VectorXd trial = x + t * dx;
            const Eigen::VectorXd ft = evaluate(trial);
            const double tnorm = norm(ft);
            if (tnorm < fnorm) {
                x = trial;
                f = ft;
                fnorm = tnorm;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw ConvergenceError("damped Newton step failed to reduce the residual for " +
                                       std::string(to_string(model)) + " d = " + std::to_string(d),
                                   fnorm);
        }
    }
    if (!(fnorm < options.tolerance)) {
        throw ConvergenceError("exponent system did not converge within " + std::to_string(options.max_iterations) +
                                   " iterations",
                               fnorm);
    }

    MeanFieldSolution out;
    out.d = d;
    out.model = model;
    out.lambda1 = x[0];
    out.residual_norm = fnorm;
    out.iterations = iteration;
    if (!(out.lambda1 > 0.0 && out.lambda1 < (d - 1.0) / d)) {
        throw ModelValidityError("solved lambda_1 = " + std::to_string(out.lambda1) + " lies outside (0, (d-1)/d)");
    }
    const MomentMap m = system.complete_amplitudes(unpack(x));
    for (const auto& [alpha, value] : m) {
        out.amplitudes[alpha] = value / std::pow(scale, alpha);
        out.lambdas[alpha] = lambda_alpha(alpha, out.lambda1);
    }
    out.gamma = fractal_dimension(out.lambda1, 1.0);
    return out;
}

double it3_closure_deviation(const MeanFieldSolution& s) {
    const double l1 = s.lambda1;
    const double m1 = s.amplitudes.at(1.0);
    const double predicted = 3.0 * m1 * s.amplitudes.at(2.0) * (10.0 * l1 - 3.0) / (4.0 * (3.0 * l1 - 1.0));
    return std::abs(s.amplitudes.at(3.0) - predicted) / std::abs(predicted);
}

}  // namespace rap
