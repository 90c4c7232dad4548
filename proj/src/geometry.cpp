#include "rap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rap/error.hpp"

namespace rap {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) {
        throw DomainError("point dimension " + std::to_string(dim) + " outside [1, " +
                          std::to_string(kMaxDim) + "]");
    }
}

// Continued fraction for I_x(a,b), modified Lentz. Converges for x < (a+1)/(a+b+2).
double beta_continued_fraction(double x, double a, double b) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw ConvergenceError("incomplete beta continued fraction did not converge", std::abs(h));
}

}  // namespace

PointD::PointD(int dim) : dim_(dim) { check_dim(dim); }

PointD::PointD(std::initializer_list<double> coords) : dim_(static_cast<int>(coords.size())) {
    check_dim(dim_);
    std::copy(coords.begin(), coords.end(), coords_.begin());
}

PointD::PointD(std::span<const double> coords) : dim_(static_cast<int>(coords.size())) {
    check_dim(dim_);
    std::copy(coords.begin(), coords.end(), coords_.begin());
}

PointD& PointD::operator+=(const PointD& other) {
    if (other.dim_ != dim_) throw DomainError("dimension mismatch in point addition");
    for (int i = 0; i < dim_; ++i) (*this)[i] += other[i];
    return *this;
}

bool operator==(const PointD& a, const PointD& b) {
    if (a.dim_ != b.dim_) return false;
    return std::equal(a.coords_.begin(), a.coords_.begin() + a.dim_, b.coords_.begin());
}

Sphere::Sphere(PointD c, double r) : center(c), radius(r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("sphere radius must be positive and finite");
    }
}

BoxDomain::BoxDomain(int d, double l) : dim(d), side(l) {
    if (d < 2 || d > kMaxDim) throw DomainError("box dimension " + std::to_string(d) + " unsupported");
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("box side must be positive and finite");
}

double BoxDomain::volume() const { return std::pow(side, dim); }

bool BoxDomain::contains(const PointD& p) const {
    if (p.dim() != dim) return false;
    for (int i = 0; i < dim; ++i) {
        if (!(p[i] >= 0.0 && p[i] <= side)) return false;
    }
    return true;
}

double distance(const PointD& a, const PointD& b) {
    if (a.dim() != b.dim()) throw DomainError("dimension mismatch in distance");
    double sum = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

double unit_ball_volume(int d) {
    if (d < 1) throw DomainError("unit_ball_volume requires d >= 1");
    const double half = 0.5 * d;
    return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("incomplete beta requires a > 0 and b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta requires x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(x, a, b) / a;
    }
    return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double cap_area(double phi, int d) {
    if (d < 2) throw DomainError("cap_area requires d >= 2");
    if (!(phi >= 0.0 && phi <= 0.5 * std::numbers::pi)) {
        throw DomainError("cap half-angle must lie in [0, pi/2]");
    }
    const double half_sphere = 0.5 * d * unit_ball_volume(d);
    if (phi == 0.0) return 0.0;
    const double s = std::sin(phi);
    // sin(pi/2) rounds to exactly 1, so the hemisphere is exact.
    return half_sphere * regularized_incomplete_beta(std::min(1.0, s * s), 0.5 * (d - 1), 0.5);
}

double signed_gap(const PointD& point, const Sphere& sphere) {
    return distance(point, sphere.center) - sphere.radius;
}

double wall_gap(const PointD& point, const BoxDomain& box) {
    if (!box.contains(point)) throw DomainError("point lies outside the box");
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < box.dim; ++i) {
        gap = std::min(gap, std::min(point[i], box.side - point[i]));
    }
    return gap;
}

}  // namespace rap
