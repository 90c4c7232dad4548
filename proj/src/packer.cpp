#include "rap/packer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "rap/error.hpp"

namespace rap {

double radius_power(double r, double alpha) {
    if (alpha == 0.0) return 1.0;
    if (alpha == 1.0) return r;
    if (alpha == 2.0) return r * r;
    if (alpha == 3.0) return r * r * r;
    if (alpha == 4.0) {
        const double r2 = r * r;
        return r2 * r2;
    }
    if (alpha == 0.5) return std::sqrt(r);
    if (alpha == 1.5) return r * std::sqrt(r);
    return std::pow(r, alpha);
}

void CompensatedSum::add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        compensation_ += (sum_ - t) + x;
    } else {
        compensation_ += (x - t) + sum_;
    }
    sum_ = t;
}

MomentAccumulator::MomentAccumulator(std::vector<double> alphas, const BoxDomain& box)
    : alphas_(std::move(alphas)),
      sums_(alphas_.size()),
      dim_(box.dim),
      total_volume_(box.volume()),
      ball_volume_(unit_ball_volume(box.dim)) {
    for (double a : alphas_) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("moment orders must be finite and >= 0");
    }
}

void MomentAccumulator::add(double radius) {
    for (std::size_t i = 0; i < alphas_.size(); ++i) sums_[i].add(radius_power(radius, alphas_[i]));
    volume_sum_.add(radius_power(radius, dim_));
    ++count_;
}

std::vector<double> MomentAccumulator::moments() const {
    std::vector<double> out;
    out.reserve(sums_.size());
    for (const auto& s : sums_) out.push_back(s.value());
    return out;
}

double MomentAccumulator::pore() const { return total_volume_ - ball_volume_ * volume_sum_.value(); }

std::vector<double> default_alphas(int dim) {
    std::vector<double> out;
    for (double a : {0.5, 1.0, 1.5, 2.0, 3.0, 4.0}) {
        if (a <= dim) out.push_back(a);
    }
    return out;
}

namespace {

PackingOptions resolve(PackingOptions options, int dim) {
    if (options.alphas.empty()) options.alphas = default_alphas(dim);
    return options;
}

}  // namespace

CoverageMask::CoverageMask(const BoxDomain& box, std::size_t cell_budget) : dim_(box.dim), cells_(1) {
    while (std::pow(static_cast<double>(cells_ + 1), dim_) <= static_cast<double>(cell_budget)) ++cells_;
    cell_size_ = box.side / cells_;
    inv_cell_size_ = cells_ / box.side;
    mask_.assign(static_cast<std::size_t>(std::pow(static_cast<double>(cells_), dim_)), 0);
}

bool CoverageMask::covered(const PointD& site) const {
    std::size_t index = 0;
    for (int i = dim_ - 1; i >= 0; --i) {
        const int c = std::min(cells_ - 1, static_cast<int>(site[i] * inv_cell_size_));
        index = index * cells_ + static_cast<std::size_t>(c);
    }
    return mask_[index] != 0;
}

void CoverageMask::cover(const Sphere& sphere) {
    // A cell fits inside the ball only if its half diagonal is shorter than r.
    const double r = sphere.radius;
    if (r * r * 4.0 <= cell_size_ * cell_size_ * dim_) return;
    const double r2 = r * r * (1.0 - 1e-9);
    std::array<int, kMaxDim> lo{}, hi{}, idx{};
    for (int i = 0; i < dim_; ++i) {
        lo[i] = std::max(0, static_cast<int>(std::floor((sphere.center[i] - r) * inv_cell_size_)));
        hi[i] = std::min(cells_ - 1, static_cast<int>(std::floor((sphere.center[i] + r) * inv_cell_size_)));
        if (lo[i] > hi[i]) return;
        idx[i] = lo[i];
    }
    while (true) {
        double far2 = 0.0;
        std::size_t index = 0;
        for (int i = dim_ - 1; i >= 0; --i) {
            const double a = idx[i] * cell_size_ - sphere.center[i];
            const double b = a + cell_size_;
            const double m = std::max(std::abs(a), std::abs(b));
            far2 += m * m;
            index = index * cells_ + static_cast<std::size_t>(idx[i]);
        }
        if (far2 < r2 && mask_[index] == 0) {
            mask_[index] = 1;
            ++covered_count_;
        }
        int k = 0;
        while (k < dim_ && ++idx[k] > hi[k]) {
            idx[k] = lo[k];
            ++k;
        }
        if (k == dim_) break;
    }
}

Packing::Packing(const BoxDomain& box, std::uint64_t seed, PackingOptions options)
    : box_(box),
      seed_(seed),
      max_attempts_(options.max_attempts_per_step),
      tree_(box.dim, options.leaf_capacity),
      moments_(resolve(options, box.dim).alphas, box),
      rng_(seed) {
    if (options.mask_cells > 0) mask_.emplace(box, options.mask_cells);
}

Packing Packing::from_spheres(const BoxDomain& box, std::uint64_t seed, std::span<const Sphere> spheres,
                              PackingOptions options) {
    Packing packing(box, seed, std::move(options));
    for (const auto& s : spheres) {
        if (s.center.dim() != box.dim) throw DomainError("sphere dimension does not match box");
        packing.tree_.insert(s);
        packing.moments_.add(s.radius);
        if (packing.mask_) packing.mask_->cover(s);
    }
    packing.attempts_ = spheres.size();
    return packing;
}

Sphere Packing::step() {
    PointD site(box_.dim);
    const QueryOptions options{.stop_when_inside = true};
    for (std::uint64_t tries = 0; tries < max_attempts_; ++tries) {
        for (int i = 0; i < box_.dim; ++i) site[i] = box_.side * rng_.uniform();
        ++attempts_;
        if (mask_ && mask_->covered(site)) continue;
        const MaxRadius hit = tree_.query_max_radius(site, box_, options);
        if (!(hit.radius > 0.0)) continue;
        Sphere sphere(site, hit.radius);
        tree_.insert(sphere);
        moments_.add(hit.radius);
        if (mask_) mask_->cover(sphere);
        return sphere;
    }
    throw SaturationError("no free nucleation site after " + std::to_string(max_attempts_) +
                              " attempts at n = " + std::to_string(size()),
                          attempts_);
}

RadiusHistogram::RadiusHistogram(int bins_per_decade, std::int64_t first_bin, std::vector<std::uint64_t> counts)
    : bins_per_decade_(bins_per_decade), first_bin_(first_bin), counts_(std::move(counts)) {
    for (auto c : counts_) total_ += c;
}

std::int64_t RadiusHistogram::bin_of(double radius) const {
    return static_cast<std::int64_t>(std::floor(bins_per_decade_ * std::log10(radius)));
}

double RadiusHistogram::lower_edge(std::int64_t bin) const {
    return std::pow(10.0, static_cast<double>(bin) / bins_per_decade_);
}

void RadiusHistogram::add(double radius) {
    if (!(radius > 0.0)) throw DomainError("histogram radius must be positive");
    const std::int64_t bin = bin_of(radius);
    if (counts_.empty()) {
        first_bin_ = bin;
        counts_.assign(1, 0);
    } else if (bin < first_bin_) {
        counts_.insert(counts_.begin(), static_cast<std::size_t>(first_bin_ - bin), 0);
        first_bin_ = bin;
    } else if (bin >= first_bin_ + static_cast<std::int64_t>(counts_.size())) {
        counts_.resize(static_cast<std::size_t>(bin - first_bin_ + 1), 0);
    }
    ++counts_[static_cast<std::size_t>(bin - first_bin_)];
    ++total_;
}

std::uint64_t RadiusHistogram::count_at_least(std::int64_t bin) const {
    if (bin <= first_bin_) return total_;
    std::uint64_t sum = 0;
    for (std::int64_t k = bin - first_bin_; k < static_cast<std::int64_t>(counts_.size()); ++k) {
        sum += counts_[static_cast<std::size_t>(k)];
    }
    return sum;
}

std::vector<std::uint64_t> checkpoint_grid(std::uint64_t count, int per_decade) {
    if (per_decade < 1) throw DomainError("checkpoints per decade must be positive");
    std::vector<std::uint64_t> grid;
    if (count == 0) return grid;
    for (int k = 0;; ++k) {
        const double value = std::pow(10.0, static_cast<double>(k) / per_decade);
        const auto n = static_cast<std::uint64_t>(std::llround(value));
        if (n > count) break;
        if (grid.empty() || n > grid.back()) grid.push_back(n);
    }
    if (grid.back() != count) grid.push_back(count);
    return grid;
}

std::pair<Packing, SnapshotSeries> run(const SimulationConfig& config) {
    const BoxDomain box(config.dim, config.side);
    PackingOptions options{.leaf_capacity = config.leaf_capacity,
                           .max_attempts_per_step = config.max_attempts_per_step,
                           .alphas = config.alphas.empty() ? default_alphas(config.dim) : config.alphas};
    Packing packing(box, config.seed, options);

    SnapshotSeries series;
    series.dim = config.dim;
    series.side = config.side;
    series.seed = config.seed;
    series.alphas = options.alphas;

    RadiusHistogram histogram(config.histogram_bins_per_decade);
    const auto grid = checkpoint_grid(config.count, config.checkpoints_per_decade);
    std::size_t next = 0;
    for (std::uint64_t i = 0; i < config.count; ++i) {
        const Sphere s = packing.step();
        if (config.record_histograms) histogram.add(s.radius);
        if (next < grid.size() && packing.size() == grid[next]) {
            Checkpoint cp;
            cp.n = packing.size();
            cp.moments = packing.accumulator().moments();
            cp.pore = packing.pore();
            cp.attempts = packing.attempts();
            if (config.record_histograms) cp.histogram = histogram;
            series.checkpoints.push_back(std::move(cp));
            ++next;
        }
    }
    series.final_radii.assign(packing.radii().begin(), packing.radii().end());
    return {std::move(packing), std::move(series)};
}

double LogHistogram::bin_width() const {
    return density.empty() ? 0.0 : (ln_hi - ln_lo) / static_cast<double>(density.size());
}

double LogHistogram::center(std::size_t bin) const {
    return ln_lo + (static_cast<double>(bin) + 0.5) * bin_width();
}

double ProbeResult::survival(double r) const {
    if (radii.empty()) return 0.0;
    const auto above = radii.end() - std::upper_bound(radii.begin(), radii.end(), r);
    return static_cast<double>(above) / static_cast<double>(radii.size());
}

namespace {

constexpr std::uint64_t kProbeChunk = 1 << 16;
constexpr std::uint64_t kProbeStreamBase = 0x50524F4245000000ULL;

struct ProbeChunk {
    std::uint64_t rejections = 0;
    std::vector<double> radii;
};

}  // namespace

ProbeResult probe_insertions(const Packing& packing, std::uint64_t count, std::uint64_t seed, unsigned threads,
                             int bins) {
    if (bins < 1) throw DomainError("probe histogram needs at least one bin");
    const std::uint64_t chunks = (count + kProbeChunk - 1) / kProbeChunk;
    std::vector<ProbeChunk> results(chunks);
    const BoxDomain& box = packing.box();

    auto work = [&](std::uint64_t c) {
        Philox4x64 rng(seed, kProbeStreamBase + c);
        const std::uint64_t n = std::min(kProbeChunk, count - c * kProbeChunk);
        ProbeChunk& out = results[c];
        out.radii.reserve(n);
        PointD site(box.dim);
        for (std::uint64_t k = 0; k < n; ++k) {
            for (int i = 0; i < box.dim; ++i) site[i] = box.side * rng.uniform();
            const double r = packing.tree().query_max_radius(site, box).radius;
            if (r > 0.0) {
                out.radii.push_back(r);
            } else {
                ++out.rejections;
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(chunks, 1)));
    if (threads <= 1) {
        for (std::uint64_t c = 0; c < chunks; ++c) work(c);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::uint64_t c = next++; c < chunks; c = next++) work(c);
            });
        }
    }

    ProbeResult result;
    result.attempts = count;
    for (auto& chunk : results) {
        result.inside_rejections += chunk.rejections;
        result.radii.insert(result.radii.end(), chunk.radii.begin(), chunk.radii.end());
    }
    std::sort(result.radii.begin(), result.radii.end());

    if (!result.radii.empty()) {
        LogHistogram& h = result.log_histogram;
        h.ln_lo = std::log(result.radii.front());
        h.ln_hi = std::log(result.radii.back());
        if (!(h.ln_hi > h.ln_lo)) h.ln_hi = h.ln_lo + 1e-12;
        h.density.assign(static_cast<std::size_t>(bins), 0.0);
        const double width = (h.ln_hi - h.ln_lo) / bins;
        for (double r : result.radii) {
            auto k = static_cast<std::int64_t>((std::log(r) - h.ln_lo) / width);
            k = std::clamp<std::int64_t>(k, 0, bins - 1);
            h.density[static_cast<std::size_t>(k)] += 1.0;
        }
        const double norm = 1.0 / (static_cast<double>(result.radii.size()) * width);
        for (double& v : h.density) v *= norm;
    }
    return result;
}

std::vector<double> moments(const Packing& packing, std::span<const double> alphas) {
    std::vector<double> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        if (!(a >= 0.0)) throw DomainError("moment order must be >= 0");
        CompensatedSum sum;
        for (double r : packing.radii()) sum.add(radius_power(r, a));
        out.push_back(sum.value());
    }
    return out;
}

}  // namespace rap
