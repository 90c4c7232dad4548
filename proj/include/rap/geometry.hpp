#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace rap {

/// Largest ambient dimension supported by the fixed-capacity point type.
inline constexpr int kMaxDim = 8;

/// Point in R^d with the dimension chosen at runtime (2 <= d <= kMaxDim).
class PointD {
  public:
    PointD() = default;
    explicit PointD(int dim);
    PointD(std::initializer_list<double> coords);
    explicit PointD(std::span<const double> coords);

    int dim() const noexcept { return dim_; }
    double operator[](int i) const noexcept { return coords_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) noexcept { return coords_[static_cast<std::size_t>(i)]; }
    std::span<const double> coords() const noexcept { return {coords_.data(), static_cast<std::size_t>(dim_)}; }

    PointD& operator+=(const PointD& other);
    friend PointD operator+(PointD a, const PointD& b) { return a += b; }
    friend bool operator==(const PointD& a, const PointD& b);

  private:
    std::array<double, kMaxDim> coords_{};
    int dim_ = 0;
};

struct Sphere {
    PointD center;
    double radius = 0.0;

    /// Throws DomainError unless the radius is positive and finite.
    Sphere(PointD c, double r);
};

/// The axis-aligned cube [0, side]^dim.
struct BoxDomain {
    int dim = 2;
    double side = 1.0;

    BoxDomain(int d, double l);
    double volume() const;
    bool contains(const PointD& p) const;
};

/// Euclidean distance between two points of equal dimension.
double distance(const PointD& a, const PointD& b);

/// pi^(d/2) / Gamma(d/2 + 1).
double unit_ball_volume(int d);

/// Regularized incomplete beta function I_x(a, b).
///
/// Evaluated with the modified Lentz continued fraction, switching to the
/// reflection I_x(a,b) = 1 - I_{1-x}(b,a) when x > (a+1)/(a+b+2) so that the
/// fraction always converges quickly.
double regularized_incomplete_beta(double x, double a, double b);

/// Area of the unit hyperspherical cap of half-angle phi in R^d, phi in [0, pi/2].
double cap_area(double phi, int d);

/// |point - center| - radius; negative iff the point is strictly inside.
double signed_gap(const PointD& point, const Sphere& sphere);

/// Distance from an interior point to the nearest wall of the box.
double wall_gap(const PointD& point, const BoxDomain& box);

}  // namespace rap
