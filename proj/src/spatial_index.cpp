#include "rap/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rap/error.hpp"

namespace rap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxStack = 1024;

// Relative slack on the pruning test, scaled by the coordinate magnitude. A
// node is skipped only when its lower bound beats the current best by more
// than the rounding error of a gap evaluation, so pruning never changes the
// computed minimum.
constexpr double kPruneSlack = 1e-12;

}  // namespace

SphereTree::SphereTree(int dim, std::size_t leaf_capacity) : dim_(dim), leaf_capacity_(leaf_capacity) {
    if (dim < 1 || dim > kMaxDim) throw DomainError("SphereTree dimension unsupported");
    if (leaf_capacity < 2) throw DomainError("leaf capacity must be at least 2");
    Node root;
    root.lo.fill(kInf);
    root.hi.fill(-kInf);
    nodes_.push_back(std::move(root));
}

void SphereTree::grow(Node& node, const double* s) const {
    const double r = s[dim_];
    for (int i = 0; i < dim_; ++i) {
        node.lo[i] = std::min(node.lo[i], s[i] - r);
        node.hi[i] = std::max(node.hi[i], s[i] + r);
    }
    node.max_radius = std::max(node.max_radius, r);
}

std::size_t SphereTree::insert(const Sphere& sphere) {
    if (sphere.center.dim() != dim_) throw DomainError("sphere dimension does not match tree");
    const std::size_t id = radii_.size();
    if (id >= std::numeric_limits<std::uint32_t>::max()) throw Error("sphere tree is full");

    std::array<double, kMaxDim + 1> packed{};
    for (int i = 0; i < dim_; ++i) {
        packed[i] = sphere.center[i];
        centers_.push_back(sphere.center[i]);
        coord_scale_ = std::max(coord_scale_, std::abs(sphere.center[i]) + sphere.radius);
    }
    packed[dim_] = sphere.radius;
    radii_.push_back(sphere.radius);

    int index = 0;
    while (true) {
        Node& node = nodes_[index];
        grow(node, packed.data());
        if (node.is_leaf()) {
            node.packed.insert(node.packed.end(), packed.begin(), packed.begin() + dim_ + 1);
            node.ids.push_back(static_cast<std::uint32_t>(id));
            if (node.ids.size() > leaf_capacity_) split(index);
            break;
        }
        index = packed[node.split_axis] < node.split_value ? node.left : node.right;
    }
    return id;
}

void SphereTree::split(int index) {
    const std::size_t stride = static_cast<std::size_t>(dim_) + 1;
    const std::size_t count = nodes_[index].ids.size();

    int axis = 0;
    for (int i = 1; i < dim_; ++i) {
        const Node& n = nodes_[index];
        if (n.hi[i] - n.lo[i] > n.hi[axis] - n.lo[axis]) axis = i;
    }

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t half = count / 2;
    {
        const auto& packed = nodes_[index].packed;
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return packed[a * stride + axis] < packed[b * stride + axis];
                         });
    }

    Node left;
    Node right;
    for (Node* child : {&left, &right}) {
        child->lo.fill(kInf);
        child->hi.fill(-kInf);
        child->packed.reserve((leaf_capacity_ + 1) * stride);
        child->ids.reserve(leaf_capacity_ + 1);
    }
    {
        const Node& parent = nodes_[index];
        for (std::size_t k = 0; k < count; ++k) {
            Node& child = k < half ? left : right;
            const double* s = &parent.packed[order[k] * stride];
            grow(child, s);
            child.packed.insert(child.packed.end(), s, s + stride);
            child.ids.push_back(parent.ids[order[k]]);
        }
    }

    const int left_index = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(left));
    nodes_.push_back(std::move(right));

    Node& parent = nodes_[index];
    parent.split_axis = axis;
    parent.split_value = parent.packed[order[half] * stride + axis];
    parent.left = left_index;
    parent.right = left_index + 1;
    parent.packed.clear();
    parent.packed.shrink_to_fit();
    parent.ids.clear();
    parent.ids.shrink_to_fit();
}

Sphere SphereTree::sphere(std::size_t id) const {
    if (id >= radii_.size()) throw DomainError("sphere id out of range");
    const std::size_t d = static_cast<std::size_t>(dim_);
    return Sphere(PointD(std::span<const double>(centers_.data() + id * d, d)), radii_[id]);
}

SphereTree::NodeView SphereTree::node(std::size_t index) const {
    const Node& n = nodes_.at(index);
    const std::size_t d = static_cast<std::size_t>(dim_);
    return {std::span<const double>(n.lo.data(), d), std::span<const double>(n.hi.data(), d), n.max_radius,
            n.ids, n.left, n.right};
}

MaxRadius SphereTree::query_max_radius(const PointD& point, const BoxDomain& box,
                                       const QueryOptions& options) const {
    if (point.dim() != dim_ || box.dim != dim_) throw DomainError("query dimension does not match tree");
    const double wall = wall_gap(point, box);
    switch (dim_) {
        case 2: return query_impl<2>(point, wall, options);
        case 3: return query_impl<3>(point, wall, options);
        case 4: return query_impl<4>(point, wall, options);
        default: return query_impl<0>(point, wall, options);
    }
}

template <int D>
MaxRadius SphereTree::query_impl(const PointD& point, double wall, const QueryOptions& options) const {
    const int dim = D > 0 ? D : dim_;
    const std::size_t stride = static_cast<std::size_t>(dim) + 1;
    std::array<double, kMaxDim> p{};
    double scale = 0.0;
    for (int i = 0; i < dim; ++i) {
        p[i] = point[i];
        scale = std::max(scale, std::abs(p[i]));
    }
    const double slack = kPruneSlack * std::max(scale, coord_scale_);

    MaxRadius result{wall, std::nullopt};
    if (radii_.empty()) return result;

    // Lower bound on the signed gap of any sphere below the node.
    auto lower_bound = [&](const Node& n) {
        double sum = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double excess = std::max({n.lo[i] - p[i], 0.0, p[i] - n.hi[i]});
            sum += excess * excess;
        }
        return sum > 0.0 ? std::sqrt(sum) : -n.max_radius;
    };

    struct Entry {
        int index;
        double bound;
    };
    std::array<Entry, kMaxStack> stack;
    std::size_t top = 0;
    stack[top++] = {0, lower_bound(nodes_[0])};

    while (top > 0) {
        const Entry entry = stack[--top];
        if (entry.bound > result.radius + slack) continue;
        const Node& n = nodes_[entry.index];
        if (options.nodes_visited) ++*options.nodes_visited;

        if (n.is_leaf()) {
            const std::size_t count = n.ids.size();
            const double* s = n.packed.data();
            for (std::size_t k = 0; k < count; ++k, s += stride) {
                double sum = 0.0;
                for (int i = 0; i < dim; ++i) {
                    const double diff = p[i] - s[i];
                    sum += diff * diff;
                }
                const double gap = std::sqrt(sum) - s[dim];
                if (gap < result.radius) {
                    result.radius = gap;
                    result.nearest = n.ids[k];
                }
            }
            if (options.stop_when_inside && result.radius < 0.0) return result;
            continue;
        }

        const double bl = lower_bound(nodes_[n.left]);
        const double br = lower_bound(nodes_[n.right]);
        if (top + 2 > kMaxStack) throw Error("sphere tree traversal stack exhausted");
        // Nearer child on top of the stack.
        if (bl <= br) {
            stack[top++] = {n.right, br};
            stack[top++] = {n.left, bl};
        } else {
            stack[top++] = {n.left, bl};
            stack[top++] = {n.right, br};
        }
    }
    return result;
}

template MaxRadius SphereTree::query_impl<0>(const PointD&, double, const QueryOptions&) const;
template MaxRadius SphereTree::query_impl<2>(const PointD&, double, const QueryOptions&) const;
template MaxRadius SphereTree::query_impl<3>(const PointD&, double, const QueryOptions&) const;
template MaxRadius SphereTree::query_impl<4>(const PointD&, double, const QueryOptions&) const;

}  // namespace rap
