#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rap/geometry.hpp"
#include "rap/random.hpp"
#include "rap/spatial_index.hpp"

namespace rap {

/// r^alpha with exact fast paths for the common integer and half-integer orders.
double radius_power(double r, double alpha);

/// Neumaier-compensated running sum.
class CompensatedSum {
  public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + compensation_; }

  private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Streaming moments M_alpha(n) = sum_k r_k^alpha and pore volume L^d - V_d M_d(n).
class MomentAccumulator {
  public:
    MomentAccumulator(std::vector<double> alphas, const BoxDomain& box);

    void add(double radius);

    std::span<const double> alphas() const noexcept { return alphas_; }
    double moment(std::size_t index) const { return sums_.at(index).value(); }
    std::vector<double> moments() const;
    double pore() const;
    std::uint64_t count() const noexcept { return count_; }

  private:
    std::vector<double> alphas_;
    std::vector<CompensatedSum> sums_;
    CompensatedSum volume_sum_;  // M_d, tracked whether or not d is requested
    int dim_;
    double total_volume_;
    double ball_volume_;
    std::uint64_t count_ = 0;
};

/// {1/2, 1, 3/2, 2, 3, 4} restricted to [0, d].
std::vector<double> default_alphas(int dim);

/// Grid over the box marking cells that lie entirely inside one sphere. A
/// site in a marked cell is rejected without a tree query.
class CoverageMask {
  public:
    CoverageMask(const BoxDomain& box, std::size_t cell_budget);
    void cover(const Sphere& sphere);
    bool covered(const PointD& site) const;
    int cells_per_axis() const noexcept { return cells_; }
    std::size_t covered_cells() const noexcept { return covered_count_; }

  private:
    int dim_;
    int cells_;
    double cell_size_;
    double inv_cell_size_;
    std::vector<std::uint8_t> mask_;
    std::size_t covered_count_ = 0;
};

struct PackingOptions {
    std::size_t leaf_capacity = SphereTree::kDefaultLeafCapacity;
    std::uint64_t max_attempts_per_step = 1'000'000'000;
    std::vector<double> alphas;  // empty selects default_alphas(dim)
    std::size_t mask_cells = std::size_t{1} << 22;  // 0 disables the coverage mask
};

/// A random Apollonian packing of a box, grown one sphere at a time.
class Packing {
  public:
    Packing(const BoxDomain& box, std::uint64_t seed, PackingOptions options = {});

    /// Rebuilds a frozen packing from stored spheres (e.g. a CSV export).
    static Packing from_spheres(const BoxDomain& box, std::uint64_t seed, std::span<const Sphere> spheres,
                                PackingOptions options = {});

    /// Samples uniform sites until one falls outside every sphere, then inserts
    /// the largest sphere centered there. Throws SaturationError past the cap.
    Sphere step();

    const BoxDomain& box() const noexcept { return box_; }
    const SphereTree& tree() const noexcept { return tree_; }
    const MomentAccumulator& accumulator() const noexcept { return moments_; }
    std::span<const double> radii() const noexcept { return tree_.radii(); }
    std::size_t size() const noexcept { return tree_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t attempts() const noexcept { return attempts_; }
    double pore() const { return moments_.pore(); }

  private:
    BoxDomain box_;
    std::uint64_t seed_;
    std::uint64_t max_attempts_;
    SphereTree tree_;
    MomentAccumulator moments_;
    std::optional<CoverageMask> mask_;
    Philox4x64 rng_;
    std::uint64_t attempts_ = 0;
};

/// Counts of radii on an absolute logarithmic grid: bin k covers
/// [10^(k/b), 10^((k+1)/b)) for b bins per decade.
class RadiusHistogram {
  public:
    explicit RadiusHistogram(int bins_per_decade = 256) : bins_per_decade_(bins_per_decade) {}
    RadiusHistogram(int bins_per_decade, std::int64_t first_bin, std::vector<std::uint64_t> counts);

    void add(double radius);

    int bins_per_decade() const noexcept { return bins_per_decade_; }
    std::int64_t first_bin() const noexcept { return first_bin_; }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::int64_t bin_of(double radius) const;
    double lower_edge(std::int64_t bin) const;
    /// Number of radii >= lower_edge(bin).
    std::uint64_t count_at_least(std::int64_t bin) const;
    std::uint64_t total() const noexcept { return total_; }

  private:
    int bins_per_decade_;
    std::int64_t first_bin_ = 0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct Checkpoint {
    std::uint64_t n = 0;
    std::vector<double> moments;  // aligned with SnapshotSeries::alphas
    double pore = 0.0;
    std::uint64_t attempts = 0;
    std::optional<RadiusHistogram> histogram;
};

struct SnapshotSeries {
    int dim = 2;
    double side = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> alphas;
    std::vector<Checkpoint> checkpoints;
    std::vector<double> final_radii;  // the full list at the last checkpoint
};

struct SimulationConfig {
    int dim = 2;
    double side = 100.0;
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
    std::vector<double> alphas;  // empty selects default_alphas(dim)
    int checkpoints_per_decade = 64;
    int histogram_bins_per_decade = 256;
    bool record_histograms = true;
    std::size_t leaf_capacity = SphereTree::kDefaultLeafCapacity;
    std::uint64_t max_attempts_per_step = 1'000'000'000;
};

/// Distinct values round(10^(k/per_decade)) <= count, always ending at count.
std::vector<std::uint64_t> checkpoint_grid(std::uint64_t count, int per_decade);

/// Grows a packing of config.count spheres, checkpointing on the log grid.
std::pair<Packing, SnapshotSeries> run(const SimulationConfig& config);

/// Empirical density of ln r from probe radii, on uniform bins in ln r.
struct LogHistogram {
    double ln_lo = 0.0;
    double ln_hi = 0.0;
    std::vector<double> density;  // -dP/dln r estimate, normalized by accepted probes
    double bin_width() const;
    double center(std::size_t bin) const;
};

struct ProbeResult {
    std::uint64_t attempts = 0;
    std::uint64_t inside_rejections = 0;
    std::vector<double> radii;  // accepted probes, sorted ascending
    LogHistogram log_histogram;

    /// Fraction of accepted probes with radius > r.
    double survival(double r) const;
};

inline constexpr int kProbeBins = 256;

/// Test insertions into a frozen packing; never modifies it. Results do not
/// depend on `threads` (0 selects the hardware concurrency).
ProbeResult probe_insertions(const Packing& packing, std::uint64_t count, std::uint64_t seed,
                             unsigned threads = 1, int bins = kProbeBins);

/// sum_k r_k^alpha recomputed from the stored radii.
std::vector<double> moments(const Packing& packing, std::span<const double> alphas);

}  // namespace rap
