#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rap {

enum class SurfaceModelKind { UniformDistribution, IdenticalTwins, AffineRef22 };

/// Short tag used in files and on the command line: "UD", "IT", "affine".
std::string_view to_string(SurfaceModelKind kind);
/// Accepts the tags above case-insensitively.
SurfaceModelKind parse_surface_model(std::string_view text);

/// sum_k coeff_k * x^power_k over distinct, ascending, non-negative powers.
class ExponentPolynomial {
  public:
    struct Term {
        double power;
        double coeff;
        friend bool operator==(const Term&, const Term&) = default;
    };

    ExponentPolynomial() = default;
    explicit ExponentPolynomial(std::span<const Term> terms);
    ExponentPolynomial(std::initializer_list<Term> terms);

    /// Adds coeff * x^power, merging with an existing term of the same power.
    void add(double power, double coeff);

    double operator()(double x) const;
    std::span<const Term> terms() const noexcept { return terms_; }
    /// Coefficient at `power`, zero when absent.
    double coefficient(double power) const;
    /// The term with the highest power; throws on an empty polynomial.
    const Term& leading() const;
    bool has_fractional_powers() const;

    /// Antiderivative from 0 divided by `scale`: sum_k c_k x^(p_k+1) / ((p_k+1) scale).
    ExponentPolynomial integral_over(double scale) const;

  private:
    std::vector<Term> terms_;
};

/// Moment orders alpha mapped to M_alpha.
using MomentMap = std::map<double, double>;

/// Surface function S_n(r) as a polynomial in r.
///
/// Uniform distribution: s_k = d V_d C(d-1, k) M_{d-1-k}. Identical twins
/// subtracts (2 pi)^((d-1)/2) / Gamma((d+1)/2) M_{(d-1)/2} at power (d-1)/2.
/// The affine model keeps s_0 only. M_0 is taken to be n.
ExponentPolynomial surface_coefficients(SurfaceModelKind model, int d, const MomentMap& moments, double n);

/// Moment orders surface_coefficients() reads for (model, d), excluding M_0.
std::vector<double> required_moment_orders(SurfaceModelKind model, int d);

/// exp(-int_0^r S / pore). Throws ModelValidityError if the exponent goes negative.
double insertion_cdf(const ExponentPolynomial& surface, double pore, double r);

/// -dP/dln r = r S(r) / pore * P(r).
double insertion_log_density(const ExponentPolynomial& surface, double pore, double r);

/// max(0, 1 - s0 r / pore).
double insertion_cdf_affine(double s0, double pore, double r);

/// -dP/dln r of the affine model: s0 r / pore below the cutoff, zero above.
double insertion_log_density_affine(double s0, double pore, double r);

/// alpha * int_0^inf x^(alpha-1) exp(-Q(x)) dx, relative accuracy ~1e-12.
///
/// Adaptive Gauss-Kronrod on [0, x_max] with Q(x_max) >= 46. For alpha < 1
/// or fractional powers in Q the substitution x = t^2 removes the endpoint
/// singularity.
double moment_integral(double alpha, const ExponentPolynomial& q);

/// alpha * lambda1 - (alpha - 1).
double lambda_alpha(double alpha, double lambda1);

/// 1 + alpha / (1 - lambda_alpha); DomainError if lambda_alpha >= 1.
double fractal_dimension(double lambda_alpha, double alpha);

struct ReferenceGammas {
    double abk;    // d + 1 - d exp[2 (d - 2^(d+1) + 3) / (d + 2)]
    double ref22;  // d + (d + 1) / (d + 2)
};
ReferenceGammas reference_gammas(int d);

/// (e sqrt(pi) / 2) erfc(1), the closed-form lambda_1 of the 2d uniform model.
double ud2_lambda1_closed_form();

struct MeanFieldSolution {
    int d = 2;
    SurfaceModelKind model = SurfaceModelKind::UniformDistribution;
    double lambda1 = 0.0;
    std::map<double, double> lambdas;     // alpha -> lambda_alpha for every order in the system
    std::map<double, double> amplitudes;  // alpha -> m_alpha / m_1^alpha
    double gamma = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

struct SolveOptions {
    /// Value of m_1 fixing the gauge; amplitude guesses start at scale^alpha.
    double gauge_scale = 1.0;
    int max_iterations = 200;
    double tolerance = 1e-12;
    double jacobian_step = 1e-7;
    /// Overrides the default initial lambda_1 = 1 - 1/d.
    std::optional<double> initial_lambda1;
};

/// The closed exponent system of (model, d) as transcribed from the model
/// derivation: unknowns are lambda_1 and the amplitudes m_alpha for
/// alpha in `amplitude_orders`, with m_1 fixed by the gauge.
struct ClosedSystem {
    SurfaceModelKind model;
    int d;
    std::vector<double> equation_orders;
    std::vector<double> amplitude_orders;

    /// Amplitudes of every order entering the system, including m_1 and
    /// any order eliminated in closed form (m_3 = 3 m_1 m_2 in the 3d
    /// uniform model, for instance).
    MomentMap complete_amplitudes(const MomentMap& unknowns) const;
    /// Scaled exponent Q(x) of the insertion CDF.
    ExponentPolynomial exponent(const MomentMap& amplitudes) const;
    /// (m_alpha |lambda_alpha| - alpha int x^(alpha-1) e^-Q) / m_alpha per equation.
    std::vector<double> residuals(double lambda1, const MomentMap& amplitudes) const;
};

/// model in {UD, IT}, d in {2, 3, 4}.
ClosedSystem closed_system(SurfaceModelKind model, int d);

/// Q(x) assembled generically from surface_coefficients() with M_alpha -> m_alpha,
/// n -> 1, scaled by the pore amplitude V_d m_d.
ExponentPolynomial generic_exponent(SurfaceModelKind model, int d, const MomentMap& amplitudes);

/// Damped Newton solve of closed_system(model, d).
MeanFieldSolution solve_exponents(SurfaceModelKind model, int d, const SolveOptions& options = {});

/// Relative deviation of the 3d identical-twins solution from
/// m_3 = 3 m_1 m_2 (10 lambda_1 - 3) / (4 (3 lambda_1 - 1)).
double it3_closure_deviation(const MeanFieldSolution& solution);

}  // namespace rap
