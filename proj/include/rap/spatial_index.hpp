#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rap/geometry.hpp"

namespace rap {

/// Result of a largest-empty-radius query.
struct MaxRadius {
    double radius;                       // negative when the point lies inside a sphere
    std::optional<std::size_t> nearest;  // empty when the nearest obstacle is a wall
};

struct QueryOptions {
    /// Return as soon as the point is known to lie inside some sphere. The
    /// returned radius is then negative but not necessarily the minimum.
    bool stop_when_inside = false;
    /// When set, incremented once per tree node visited.
    std::uint64_t* nodes_visited = nullptr;
};

/// Bounding-volume binary tree over an append-only set of spheres.
///
/// Every node keeps an axis-aligned box enclosing the full ball extent of the
/// spheres below it. Spheres live only in leaves; a leaf holding more than
/// `leaf_capacity` spheres is split at the median center coordinate along the
/// widest axis of its box, and both children are refit tightly, so sibling
/// boxes may overlap.
class SphereTree {
  public:
    static constexpr std::size_t kDefaultLeafCapacity = 128;

    explicit SphereTree(int dim, std::size_t leaf_capacity = kDefaultLeafCapacity);

    /// Stores the sphere and returns its id (ids are dense, in insertion order).
    std::size_t insert(const Sphere& sphere);

    /// min(wall gap, min over spheres of signed gap). Bitwise equal to a
    /// linear scan using signed_gap(). Throws DomainError outside the box.
    MaxRadius query_max_radius(const PointD& point, const BoxDomain& box,
                               const QueryOptions& options = {}) const;

    std::size_t size() const noexcept { return radii_.size(); }
    int dim() const noexcept { return dim_; }
    std::size_t leaf_capacity() const noexcept { return leaf_capacity_; }
    Sphere sphere(std::size_t id) const;
    std::span<const double> radii() const noexcept { return radii_; }

    /// Read-only view of one node, for structural audits.
    struct NodeView {
        std::span<const double> lo;
        std::span<const double> hi;
        double max_radius;
        std::span<const std::uint32_t> ids;  // empty for internal nodes
        int left;                            // -1 for leaves
        int right;
    };
    std::size_t node_count() const noexcept { return nodes_.size(); }
    NodeView node(std::size_t index) const;

  private:
    struct Node {
        std::array<double, kMaxDim> lo;
        std::array<double, kMaxDim> hi;
        double max_radius = 0.0;
        int left = -1;
        int right = -1;
        int split_axis = 0;
        double split_value = 0.0;
        std::vector<double> packed;  // dim centers + radius per member, leaves only
        std::vector<std::uint32_t> ids;

        bool is_leaf() const noexcept { return left < 0; }
    };

    void grow(Node& node, const double* packed_sphere) const;
    void split(int index);

    template <int D>
    MaxRadius query_impl(const PointD& point, double wall, const QueryOptions& options) const;

    int dim_;
    std::size_t leaf_capacity_;
    double coord_scale_ = 0.0;
    std::vector<Node> nodes_;
    std::vector<double> centers_;  // dim per sphere
    std::vector<double> radii_;
};

}  // namespace rap
