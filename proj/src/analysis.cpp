#include "rap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "rap/random.hpp"

namespace rap {

namespace {

constexpr double kSigmaLo = 0.15865525393145705;  // Phi(-1)
constexpr double kSigmaHi = 0.8413447460685429;   // Phi(+1)

SeriesStats mean_and_se(const std::vector<std::vector<double>>& rows) {
    SeriesStats out;
    if (rows.empty()) return out;
    const std::size_t len = rows.front().size();
    const double count = static_cast<double>(rows.size());
    out.mean.assign(len, 0.0);
    out.se.assign(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0;
        for (const auto& r : rows) sum += r[i];
        const double mean = sum / count;
        double ss = 0.0;
        for (const auto& r : rows) ss += (r[i] - mean) * (r[i] - mean);
        out.mean[i] = mean;
        out.se[i] = rows.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Log derivative and asymptote fit

std::vector<double> log_derivative(std::span<const double> n, std::span<const double> y) {
    if (n.size() != y.size()) throw DomainError("log_derivative: n and y differ in length");
    if (n.size() < 3) throw DomainError("log_derivative needs at least 3 points");
    std::vector<double> ln_n(n.size());
    std::vector<double> ln_y(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(y[i] > 0.0)) throw DomainError("log_derivative requires y > 0");
        if (!(n[i] > 0.0) || (i > 0 && !(n[i] > n[i - 1]))) {
            throw DomainError("log_derivative requires positive, strictly increasing n");
        }
        ln_n[i] = std::log(n[i]);
        ln_y[i] = std::log(y[i]);
    }
    const std::size_t last = n.size() - 1;
    std::vector<double> out(n.size());
    out[0] = (ln_y[1] - ln_y[0]) / (ln_n[1] - ln_n[0]);
    for (std::size_t i = 1; i < last; ++i) {
        out[i] = (ln_y[i + 1] - ln_y[i - 1]) / (ln_n[i + 1] - ln_n[i - 1]);
    }
    out[last] = (ln_y[last] - ln_y[last - 1]) / (ln_n[last] - ln_n[last - 1]);
    return out;
}

namespace {

struct Profile {
    double lambda;
    double b;
    double chi2;
};

// Weighted linear least squares for (lambda, b) at fixed c.
Profile profile_at(double c, std::span<const double> ln_n, std::span<const double> y, std::span<const double> w) {
    double s = 0, sp = 0, spp = 0, sy = 0, spy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double phi = std::pow(ln_n[i], c);
        s += w[i];
        sp += w[i] * phi;
        spp += w[i] * phi * phi;
        sy += w[i] * y[i];
        spy += w[i] * phi * y[i];
    }
    const double det = s * spp - sp * sp;
    if (!(std::abs(det) > 0.0)) return {sy / s, 0.0, std::numeric_limits<double>::infinity()};
    const double lambda = (spp * sy - sp * spy) / det;
    const double b = (s * spy - sp * sy) / det;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - lambda - b * std::pow(ln_n[i], c);
        chi2 += w[i] * r * r;
    }
    return {lambda, b, chi2};
}

double chi2_of(const Eigen::Vector3d& p, std::span<const double> ln_n, std::span<const double> y,
               std::span<const double> w) {
    double chi2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - p[0] - p[1] * std::pow(ln_n[i], p[2]);
        chi2 += w[i] * r * r;
    }
    return chi2;
}

}  // namespace

FitResult fit_asymptote(std::span<const double> n, std::span<const double> slope, std::span<const double> weights,
                        const FitOptions& options) {
    const std::size_t m = n.size();
    if (slope.size() != m || weights.size() != m) throw DomainError("fit_asymptote: input lengths differ");
    if (m < 10) throw DomainError("fit_asymptote needs at least 10 points");
    if (!(options.c_min < options.c_max && options.c_max < 0.0)) throw DomainError("fit requires c_min < c_max < 0");

    std::vector<double> ln_n(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(n[i] > 1.0)) throw DomainError("fit_asymptote requires n > 1");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]) || !std::isfinite(slope[i])) {
            throw DomainError("fit_asymptote requires finite data and positive finite weights");
        }
        ln_n[i] = std::log(n[i]);
    }

    // Variable projection: scan c, refine with Brent, then polish all three
    // parameters with Levenberg-Marquardt.
    constexpr int kGrid = 400;
    const double t_lo = std::log(-options.c_max);
    const double t_hi = std::log(-options.c_min);
    auto c_of = [&](int k) { return -std::exp(t_lo + (t_hi - t_lo) * k / (kGrid - 1)); };
    int best_k = 0;
    double best_chi2 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kGrid; ++k) {
        const double chi2 = profile_at(c_of(k), ln_n, slope, weights).chi2;
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best_k = k;
        }
    }
    const double c_a = c_of(std::min(best_k + 1, kGrid - 1));
    const double c_b = c_of(std::max(best_k - 1, 0));
    const auto [c_best, chi2_best] = boost::math::tools::brent_find_minima(
        [&](double c) { return profile_at(c, ln_n, slope, weights).chi2; }, std::min(c_a, c_b), std::max(c_a, c_b),
        std::numeric_limits<double>::digits / 2);
    const Profile start = profile_at(c_best, ln_n, slope, weights);

    Eigen::Vector3d p(start.lambda, start.b, c_best);
    double chi2 = chi2_best;
    auto jacobian = [&](const Eigen::Vector3d& q) {
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), 3);
        for (std::size_t i = 0; i < m; ++i) {
            const double sw = std::sqrt(weights[i]);
            const double phi = std::pow(ln_n[i], q[2]);
            const auto row = static_cast<Eigen::Index>(i);
            jac(row, 0) = sw;
            jac(row, 1) = sw * phi;
            jac(row, 2) = sw * q[1] * phi * std::log(ln_n[i]);
        }
        return jac;
    };

    double mu = 1e-3;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        if (chi2 == 0.0) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd jac = jacobian(p);
        Eigen::VectorXd res(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            res[static_cast<Eigen::Index>(i)] =
                std::sqrt(weights[i]) * (slope[i] - p[0] - p[1] * std::pow(ln_n[i], p[2]));
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * res;
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::Matrix3d a = jtj;
            a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-300);
            const Eigen::Vector3d step = a.ldlt().solve(jtr);
            Eigen::Vector3d trial = p + step;
            trial[2] = std::clamp(trial[2], options.c_min, options.c_max);
            const double trial_chi2 = chi2_of(trial, ln_n, slope, weights);
            if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
                const double gain = chi2 - trial_chi2;
                p = trial;
                chi2 = trial_chi2;
                mu = std::max(mu / 10.0, 1e-12);
                improved = true;
                if (gain <= 1e-15 * std::max(chi2, 1e-300) || step.norm() <= 1e-15 * (1.0 + p.norm())) {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if (!improved) {
            // No descent direction left: at a minimum to working precision.
            converged = true;
        }
        if (converged) break;
    }

    FitResult out;
    out.lambda = p[0];
    out.b = p[1];
    out.c = p[2];
    out.chi2 = chi2;
    out.points = m;
    out.window_lo = n.front();
    out.window_hi = n.back();
    const bool at_bound = p[2] >= options.c_max * (1.0 + 1e-3) || p[2] <= options.c_min * (1.0 - 1e-3);
    if (!at_bound && (!converged || !p.allFinite())) throw FitError("asymptote fit did not converge", out);

    if (at_bound) {
        // No resolvable correction (flat at c_max, vanishing at c_min): use the nested model lambda alone.
        double sw = 0.0, swy = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            sw += weights[i];
            swy += weights[i] * slope[i];
        }
        out.lambda = swy / sw;
        out.b = 0.0;
        out.chi2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) out.chi2 += weights[i] * (slope[i] - out.lambda) * (slope[i] - out.lambda);
        out.sigma_lambda = std::sqrt(std::max(1.0, out.chi2 / static_cast<double>(m - 1)) / sw);
        return out;
    }

    const Eigen::MatrixXd jac = jacobian(p);
    const Eigen::Matrix3d cov = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
    const double inflation = std::max(1.0, chi2 / static_cast<double>(m - 3));
    out.sigma_lambda = std::sqrt(cov(0, 0) * inflation);
    if (!(out.sigma_lambda > 0.0)) {
        // Degenerate curvature (b = 0 or flat c); fall back to the (lambda, b) fit at fixed c.
        Eigen::Matrix2d jtj2 = (jac.leftCols<2>().transpose() * jac.leftCols<2>());
        out.sigma_lambda = std::sqrt(jtj2.inverse()(0, 0) * inflation);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gamma likelihood

double gamma_density(double gamma, double lambda, double sigma, double alpha) {
    if (!(gamma > 1.0)) return 0.0;
    const double u = gamma - 1.0;
    const double l = 1.0 - alpha / u;
    const double z = (l - lambda) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi)) * alpha / (u * u);
}

GammaSummary gamma_likelihood(double lambda, double sigma, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("gamma_likelihood requires alpha > 0");
    if (!(sigma >= 0.0)) throw DomainError("gamma_likelihood requires sigma >= 0");
    GammaSummary out;
    if (sigma == 0.0) {
        const double g = fractal_dimension(lambda, alpha);
        out.mode = out.lo = out.hi = g;
        return out;
    }
    const boost::math::normal_distribution<double> normal(lambda, sigma);
    const double below_one = boost::math::cdf(normal, 1.0);
    out.truncated = 1.0 - below_one > 1e-12;
    if (!(below_one > std::numeric_limits<double>::min())) {
        // No likelihood mass at lambda < 1.
        out.mode = out.lo = out.hi = std::numeric_limits<double>::infinity();
        return out;
    }

    // Quantiles map through the monotone transformation on the truncated normal.
    auto gamma_at = [&](double q) {
        const double l = boost::math::quantile(normal, q * below_one);
        return 1.0 + alpha / (1.0 - l);
    };
    out.lo = gamma_at(kSigmaLo);
    out.hi = gamma_at(kSigmaHi);

    // Stationary point of the transformed density: 2 s^2 u^2 + (1 - lambda) alpha u - alpha^2 = 0, u = gamma - 1.
    const double b = (1.0 - lambda) * alpha;
    const double u = 2.0 * alpha * alpha / (b + std::sqrt(b * b + 8.0 * sigma * sigma * alpha * alpha));
    out.mode = 1.0 + u;
    return out;
}

GammaSummary gamma_likelihood(const FitResult& fit, double alpha) {
    return gamma_likelihood(fit.lambda, fit.sigma_lambda, alpha);
}

// ---------------------------------------------------------------------------
// Ensembles and radius distribution

double CdfTable::edge(std::size_t k) const {
    return std::pow(10.0, static_cast<double>(first_bin + static_cast<std::int64_t>(k)) / bins_per_decade);
}

namespace {

// Counts N(r' >= edge) per bin of a range [first, first + len) covering every bin of h.
std::vector<double> cumulative_counts(const RadiusHistogram& h, std::int64_t first, std::size_t len) {
    std::vector<double> out(len, 0.0);
    double running = 0.0;
    for (std::size_t j = len; j-- > 0;) {
        const std::int64_t bin = first + static_cast<std::int64_t>(j);
        const std::int64_t local = bin - h.first_bin();
        if (local >= 0 && local < static_cast<std::int64_t>(h.counts().size())) {
            running += static_cast<double>(h.counts()[static_cast<std::size_t>(local)]);
        }
        out[j] = running;
    }
    return out;
}

std::pair<std::int64_t, std::size_t> common_range(std::span<const RadiusHistogram* const> hs) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (const auto* h : hs) {
        if (h->counts().empty()) continue;
        lo = std::min(lo, h->first_bin());
        hi = std::max(hi, h->first_bin() + static_cast<std::int64_t>(h->counts().size()));
    }
    if (lo > hi) return {0, 0};
    // One extra edge past the largest radius, where the count drops to zero.
    return {lo, static_cast<std::size_t>(hi - lo + 1)};
}

RadiusHistogram histogram_at(const SnapshotSeries& s, std::size_t checkpoint, int bins_per_decade) {
    const Checkpoint& cp = s.checkpoints.at(checkpoint);
    if (cp.histogram) return *cp.histogram;
    if (checkpoint + 1 == s.checkpoints.size() && s.final_radii.size() == cp.n) {
        RadiusHistogram h(bins_per_decade);
        for (double r : s.final_radii) h.add(r);
        return h;
    }
    throw PreconditionError("checkpoint n = " + std::to_string(cp.n) + " has no radius histogram");
}

}  // namespace

EnsembleSeries aggregate(std::span<const SnapshotSeries> replicas) {
    if (replicas.empty()) throw PreconditionError("no replicas to aggregate");
    const SnapshotSeries& ref = replicas.front();
    EnsembleSeries out;
    out.replica_count = replicas.size();
    out.dim = ref.dim;
    out.side = ref.side;
    out.alphas = ref.alphas;
    for (const auto& cp : ref.checkpoints) out.n.push_back(static_cast<double>(cp.n));

    for (const auto& s : replicas) {
        if (s.dim != ref.dim || s.side != ref.side) {
            throw PreconditionError("replica seed " + std::to_string(s.seed) + " has a different box");
        }
        if (s.alphas != ref.alphas) {
            throw PreconditionError("replica seed " + std::to_string(s.seed) + " records different moment orders");
        }
        bool same = s.checkpoints.size() == ref.checkpoints.size();
        for (std::size_t i = 0; same && i < s.checkpoints.size(); ++i) {
            same = s.checkpoints[i].n == ref.checkpoints[i].n;
        }
        if (!same) throw PreconditionError("replica seed " + std::to_string(s.seed) + " has a different checkpoint grid");
    }

    const std::size_t len = out.n.size();
    for (std::size_t a = 0; a < out.alphas.size(); ++a) {
        std::vector<std::vector<double>> values;
        std::vector<std::vector<double>> slopes;
        for (const auto& s : replicas) {
            std::vector<double> row(len);
            for (std::size_t i = 0; i < len; ++i) row[i] = s.checkpoints[i].moments.at(a);
            if (len >= 3) slopes.push_back(log_derivative(out.n, row));
            values.push_back(std::move(row));
        }
        out.moments.push_back(mean_and_se(values));
        out.moment_slopes.push_back(mean_and_se(slopes));
    }
    {
        std::vector<std::vector<double>> values;
        std::vector<std::vector<double>> slopes;
        for (const auto& s : replicas) {
            std::vector<double> row(len);
            for (std::size_t i = 0; i < len; ++i) row[i] = s.checkpoints[i].pore;
            if (len >= 3) slopes.push_back(log_derivative(out.n, row));
            values.push_back(std::move(row));
        }
        out.pore = mean_and_se(values);
        out.pore_slope = mean_and_se(slopes);
    }

    out.cdfs.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        std::vector<const RadiusHistogram*> hs;
        for (const auto& s : replicas) {
            if (s.checkpoints[i].histogram) hs.push_back(&*s.checkpoints[i].histogram);
        }
        if (hs.size() != replicas.size()) continue;
        const auto [first, width] = common_range(hs);
        std::vector<std::vector<double>> rows;
        for (const auto* h : hs) rows.push_back(cumulative_counts(*h, first, width));
        const SeriesStats stats = mean_and_se(rows);
        out.cdfs[i] = CdfTable{hs.front()->bins_per_decade(), first, stats.mean, stats.se};
    }
    return out;
}

std::vector<std::pair<double, double>> radius_cdf(const EnsembleSeries& ensemble, std::uint64_t n) {
    const auto it = std::find(ensemble.n.begin(), ensemble.n.end(), static_cast<double>(n));
    if (it == ensemble.n.end()) throw PreconditionError("no checkpoint at n = " + std::to_string(n));
    const auto& table = ensemble.cdfs[static_cast<std::size_t>(it - ensemble.n.begin())];
    if (!table) throw PreconditionError("checkpoint n = " + std::to_string(n) + " has no radius histogram");
    std::vector<std::pair<double, double>> out;
    out.reserve(table->mean.size() + 1);
    out.emplace_back(0.0, static_cast<double>(n));
    for (std::size_t k = 0; k < table->mean.size(); ++k) out.emplace_back(table->edge(k), table->mean[k]);
    return out;
}

SlopeEstimate cdf_slope(std::span<const SnapshotSeries> replicas, std::size_t checkpoint, double count_lo,
                        double count_hi, std::uint64_t seed, int bootstrap_samples) {
    if (replicas.empty()) throw PreconditionError("no replicas");
    if (!(count_lo > 0.0 && count_lo < count_hi)) throw DomainError("cdf_slope needs 0 < count_lo < count_hi");
    constexpr int kDefaultBins = 256;

    std::vector<RadiusHistogram> hists;
    for (const auto& s : replicas) hists.push_back(histogram_at(s, checkpoint, kDefaultBins));
    std::vector<const RadiusHistogram*> ptrs;
    for (const auto& h : hists) ptrs.push_back(&h);
    const auto [first, width] = common_range(ptrs);
    std::vector<std::vector<double>> rows;
    for (const auto& h : hists) rows.push_back(cumulative_counts(h, first, width));
    const int bins_per_decade = hists.front().bins_per_decade();
    auto edge = [&](std::size_t k) {
        return std::pow(10.0, static_cast<double>(first + static_cast<std::int64_t>(k)) / bins_per_decade);
    };

    auto mean_row = [&](std::span<const std::size_t> pick) {
        std::vector<double> m(width, 0.0);
        for (std::size_t idx : pick) {
            for (std::size_t k = 0; k < width; ++k) m[k] += rows[idx][k];
        }
        for (double& v : m) v /= static_cast<double>(pick.size());
        return m;
    };
    std::vector<std::size_t> all(replicas.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::vector<double> mean = mean_row(all);

    // Window chosen once on the full ensemble and reused for bootstrap samples.
    std::vector<std::size_t> window;
    for (std::size_t k = 0; k < width; ++k) {
        if (mean[k] >= count_lo && mean[k] <= count_hi) window.push_back(k);
    }
    if (window.size() < 3) throw PreconditionError("radius CDF window holds fewer than 3 edges");

    auto slope_of = [&](const std::vector<double>& m) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        double count = 0;
        for (std::size_t k : window) {
            if (!(m[k] > 0.0)) continue;
            const double x = std::log(edge(k));
            const double y = std::log(m[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1.0;
        }
        return (count * sxy - sx * sy) / (count * sxx - sx * sx);
    };

    SlopeEstimate out;
    out.slope = slope_of(mean);
    out.gamma = 1.0 - out.slope;
    out.points = window.size();
    out.r_lo = edge(window.front());
    out.r_hi = edge(window.back());

    if (replicas.size() > 1 && bootstrap_samples > 1) {
        Philox4x64 rng(seed, 0x424F4F5453545250ULL);
        std::vector<double> slopes;
        std::vector<std::size_t> pick(replicas.size());
        for (int b = 0; b < bootstrap_samples; ++b) {
            for (auto& p : pick) {
                p = std::min(replicas.size() - 1,
                             static_cast<std::size_t>(rng.uniform() * static_cast<double>(replicas.size())));
            }
            slopes.push_back(slope_of(mean_row(pick)));
        }
        const double mu = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
        double ss = 0.0;
        for (double s : slopes) ss += (s - mu) * (s - mu);
        out.sigma = std::sqrt(ss / static_cast<double>(slopes.size() - 1));
    }
    return out;
}

namespace {

SeriesFit fit_slope_series(const EnsembleSeries& e, const SeriesStats& slopes, double alpha, std::string series,
                           const FitWindow& window) {
    if (slopes.mean.size() != e.n.size()) throw PreconditionError("ensemble has too few checkpoints to differentiate");
    const bool weighted = e.replica_count > 1 &&
                          std::all_of(slopes.se.begin(), slopes.se.end(), [](double s) { return s > 0.0; });
    std::vector<double> n, y, w;
    for (std::size_t i = 0; i < e.n.size(); ++i) {
        if (e.n[i] < window.n_min || e.n[i] > window.n_max) continue;
        n.push_back(e.n[i]);
        y.push_back(slopes.mean[i]);
        w.push_back(weighted ? 1.0 / (slopes.se[i] * slopes.se[i]) : 1.0);
    }
    SeriesFit out;
    out.alpha = alpha;
    out.series = std::move(series);
    out.fit = fit_asymptote(n, y, w);
    out.gamma = gamma_likelihood(out.fit, alpha);
    return out;
}

}  // namespace

SeriesFit fit_moment_series(const EnsembleSeries& ensemble, double alpha, const FitWindow& window) {
    const auto it = std::find(ensemble.alphas.begin(), ensemble.alphas.end(), alpha);
    if (it == ensemble.alphas.end()) {
        std::string available;
        for (double a : ensemble.alphas) available += fmt::format("{}{}", available.empty() ? "" : ", ", a);
        throw PreconditionError(fmt::format("moment order {} not recorded; available: {}", alpha, available));
    }
    const auto index = static_cast<std::size_t>(it - ensemble.alphas.begin());
    return fit_slope_series(ensemble, ensemble.moment_slopes.at(index), alpha, "moment", window);
}

SeriesFit fit_pore_series(const EnsembleSeries& ensemble, const FitWindow& window) {
    return fit_slope_series(ensemble, ensemble.pore_slope, static_cast<double>(ensemble.dim), "pore", window);
}

// ---------------------------------------------------------------------------
// Probe comparison

std::function<double(double)> model_cdf(SurfaceModelKind model, int d, const MomentMap& moments, double n,
                                        double pore) {
    const ExponentPolynomial surface = surface_coefficients(model, d, moments, n);
    if (model == SurfaceModelKind::AffineRef22) {
        const double s0 = surface.coefficient(0.0);
        return [s0, pore](double r) { return insertion_cdf_affine(s0, pore, r); };
    }
    return [surface, pore](double r) { return insertion_cdf(surface, pore, r); };
}

MomentMap packing_moments(const Packing& packing, SurfaceModelKind model) {
    const auto orders = required_moment_orders(model, packing.box().dim);
    const auto values = moments(packing, orders);
    MomentMap out;
    for (std::size_t i = 0; i < orders.size(); ++i) out[orders[i]] = values[i];
    return out;
}

double ks_distance(std::span<const double> sorted_sample, const std::function<double(double)>& survival) {
    const auto count = static_cast<double>(sorted_sample.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
        const double model = survival(sorted_sample[i]);
        // Empirical survival jumps from (N - i)/N to (N - i - 1)/N at the i-th order statistic.
        const double before = (count - static_cast<double>(i)) / count;
        const double after = (count - static_cast<double>(i) - 1.0) / count;
        worst = std::max({worst, std::abs(model - before), std::abs(model - after)});
    }
    return worst;
}

ProbeComparison compare_probe_to_model(const ProbeResult& probe,
                                       std::span<const std::function<double(double)>> models) {
    if (probe.radii.empty()) throw PreconditionError("probe has no accepted insertions");
    ProbeComparison out;
    for (const auto& model : models) out.ks_distance.push_back(ks_distance(probe.radii, model));

    const LogHistogram& h = probe.log_histogram;
    const double width = h.bin_width();
    for (std::size_t k = 0; k < h.density.size(); ++k) {
        DensityRow row;
        row.ln_r = h.center(k);
        row.empirical = h.density[k];
        const double r_lo = std::exp(h.ln_lo + static_cast<double>(k) * width);
        const double r_hi = std::exp(h.ln_lo + static_cast<double>(k + 1) * width);
        for (const auto& model : models) row.models.push_back((model(r_lo) - model(r_hi)) / width);
        out.table.push_back(std::move(row));
    }
    return out;
}

}  // namespace rap
