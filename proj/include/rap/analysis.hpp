#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rap/error.hpp"
#include "rap/meanfield.hpp"
#include "rap/packer.hpp"

namespace rap {

/// d ln y / d ln n by central differences on the (ln n, ln y) grid, one-sided
/// at the ends. Requires >= 3 points, n strictly increasing, y > 0.
std::vector<double> log_derivative(std::span<const double> n, std::span<const double> y);

/// Weighted least-squares fit of slope(n) = lambda + b (ln n)^c with c < 0.
struct FitResult {
    double lambda = 0.0;
    double b = 0.0;
    double c = 0.0;
    double sigma_lambda = 0.0;
    double chi2 = 0.0;
    std::size_t points = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;
};

struct FitOptions {
    double c_min = -20.0;
    double c_max = -1e-3;
    int max_iterations = 200;
};

class FitError : public ConvergenceError {
  public:
    FitError(const std::string& msg, FitResult best) : ConvergenceError(msg, best.chi2), best_(best) {}
    const FitResult& best() const noexcept { return best_; }

  private:
    FitResult best_;
};

/// `weights` are inverse variances. The covariance is (J^T W J)^-1 inflated by
/// the reduced chi^2 when that exceeds 1. Requires >= 10 points.
FitResult fit_asymptote(std::span<const double> n, std::span<const double> slope, std::span<const double> weights,
                        const FitOptions& options = {});

/// Distribution of gamma = 1 + alpha / (1 - lambda) for lambda ~ N(mean, sigma^2),
/// conditioned on lambda < 1.
struct GammaSummary {
    double mode = 0.0;
    double lo = 0.0;  // 15.87% quantile
    double hi = 0.0;  // 84.13% quantile
    bool truncated = false;  // the normal puts mass > 1e-12 on lambda >= 1
};
GammaSummary gamma_likelihood(double lambda, double sigma, double alpha);
GammaSummary gamma_likelihood(const FitResult& fit, double alpha);
/// Density of gamma under the same transformation (untruncated normalization).
double gamma_density(double gamma, double lambda, double sigma, double alpha);

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> se;  // standard error of the mean; zero for one replica
};

/// Ensemble-averaged cumulative radius counts N(r' >= edge_k) on the
/// histogram grid, k = first_bin .. first_bin + size - 1.
struct CdfTable {
    int bins_per_decade = 256;
    std::int64_t first_bin = 0;
    std::vector<double> mean;
    std::vector<double> se;
    double edge(std::size_t k) const;
};

struct EnsembleSeries {
    std::size_t replica_count = 0;
    int dim = 2;
    double side = 1.0;
    std::vector<double> alphas;
    std::vector<double> n;                    // common checkpoint grid
    std::vector<SeriesStats> moments;         // per alpha
    SeriesStats pore;
    std::vector<SeriesStats> moment_slopes;   // per alpha, replica-averaged d ln M / d ln n
    SeriesStats pore_slope;
    std::vector<std::optional<CdfTable>> cdfs;  // per checkpoint, when histograms were recorded
};

/// Throws PreconditionError when the replicas disagree on grid, orders or geometry.
EnsembleSeries aggregate(std::span<const SnapshotSeries> replicas);

/// (r, N_n(r' > r)) at r = 0 and at every histogram edge of checkpoint n.
std::vector<std::pair<double, double>> radius_cdf(const EnsembleSeries& ensemble, std::uint64_t n);

/// Straight-line fit of ln N against ln r over histogram edges with
/// count_lo <= N <= count_hi at the given checkpoint; gamma = 1 - slope.
/// sigma is a bootstrap over replicas with an explicit seed.
struct SlopeEstimate {
    double slope = 0.0;
    double gamma = 0.0;
    double sigma = 0.0;
    std::size_t points = 0;
    double r_lo = 0.0;
    double r_hi = 0.0;
};
SlopeEstimate cdf_slope(std::span<const SnapshotSeries> replicas, std::size_t checkpoint, double count_lo,
                        double count_hi, std::uint64_t seed, int bootstrap_samples = 200);

/// Range of checkpoints entering an asymptote fit.
struct FitWindow {
    double n_min = 1e3;
    double n_max = std::numeric_limits<double>::infinity();
};

struct SeriesFit {
    double alpha = 0.0;
    std::string series;  // "moment" or "pore"
    FitResult fit;
    GammaSummary gamma;
};

/// Fits the replica-averaged d ln M_alpha / d ln n inside the window, weighted
/// by the replica standard errors (uniform weights for a single replica).
/// PreconditionError lists the recorded orders when alpha is missing.
SeriesFit fit_moment_series(const EnsembleSeries& ensemble, double alpha, const FitWindow& window = {});

/// Same for the pore volume; the exponent is lambda_d and gamma uses alpha = d.
SeriesFit fit_pore_series(const EnsembleSeries& ensemble, const FitWindow& window = {});

/// P(r' > r) of a surface model evaluated with measured moments and pore.
std::function<double(double)> model_cdf(SurfaceModelKind model, int d, const MomentMap& moments, double n,
                                        double pore);

/// Moments a model needs, measured on a packing.
MomentMap packing_moments(const Packing& packing, SurfaceModelKind model);

struct DensityRow {
    double ln_r = 0.0;
    double empirical = 0.0;
    std::vector<double> models;
};

struct ProbeComparison {
    std::vector<double> ks_distance;  // per model
    std::vector<DensityRow> table;    // on the probe histogram bins
};

/// Kolmogorov-Smirnov distance between the probe survival function and each
/// model survival function, plus bin-averaged model densities -dP/dln r.
ProbeComparison compare_probe_to_model(const ProbeResult& probe,
                                       std::span<const std::function<double(double)>> models);

/// sup_r |empirical survival - model survival| over the sorted sample.
double ks_distance(std::span<const double> sorted_sample, const std::function<double(double)>& survival);

}  // namespace rap
