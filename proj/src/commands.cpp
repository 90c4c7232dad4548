#include "rap/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rap/io.hpp"
#include "rap/packer.hpp"

namespace rap::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

std::string hex64(std::uint64_t h) { return fmt::format("{:016x}", h); }

Json config_json(const RunConfig& c) {
    Json j;
    j["dim"] = c.dim;
    j["side"] = c.side;
    j["count"] = c.count;
    j["seed"] = c.seed;
    j["replicas"] = c.replicas;
    j["checkpoints_per_decade"] = c.checkpoints_per_decade;
    j["histogram_bins_per_decade"] = c.histogram_bins_per_decade;
    j["histograms"] = c.histograms;
    j["alphas"] = c.alphas.empty() ? default_alphas(c.dim) : c.alphas;
    j["output_dir"] = c.output_dir;
    j["leaf_capacity"] = c.leaf_capacity;
    j["max_attempts"] = c.max_attempts;
    return j;
}

// Runs job(i) for i < count on `threads` workers; rethrows the first failure by index.
template <typename Job>
void parallel_for(unsigned count, unsigned threads, Job job) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<unsigned> next{0};
    auto worker = [&] {
        for (unsigned i; (i = next.fetch_add(1)) < count;) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < std::min(threads, count); ++t) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string replica_stem(std::uint64_t seed) { return fmt::format("seed{}", seed); }

}  // namespace

int simulate(const SimulateArgs& args, std::ostream& out) {
    const RunConfig& config = args.config;
    config.validate();
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    const unsigned threads = resolve_threads(args.threads);

    struct ReplicaInfo {
        std::uint64_t seed = 0;
        std::uint64_t attempts = 0;
        double pore = 0.0;
        std::size_t size = 0;
    };
    std::vector<ReplicaInfo> info(config.replicas);

    parallel_for(config.replicas, threads, [&](unsigned i) {
        const SimulationConfig sim = config.simulation(i);
        auto [packing, series] = run(sim);
        const std::string stem = replica_stem(sim.seed);
        const fs::path csv = dir / ("packing_" + stem + ".csv");
        const fs::path jsonl = dir / ("snapshots_" + stem + ".jsonl");
        {
            auto f = open_output(csv);
            write_packing_csv(f, packing);
            finish(f, csv);
        }
        {
            auto f = open_output(jsonl);
            write_snapshots_jsonl(f, series);
            finish(f, jsonl);
        }
        info[i] = {sim.seed, packing.attempts(), packing.pore(), packing.size()};
    });

    const std::string ini = to_ini(config);
    Json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = config_json(config);
    manifest["config_ini"] = ini;
    manifest["config_hash"] = hex64(fnv1a64(ini));
    manifest["threads"] = threads;
    Json seeds = Json::array();
    Json files = Json::array();
    Json replicas = Json::array();
    for (const auto& r : info) {
        seeds.push_back(r.seed);
        const std::string stem = replica_stem(r.seed);
        files.push_back("packing_" + stem + ".csv");
        files.push_back("snapshots_" + stem + ".jsonl");
        replicas.push_back({{"seed", r.seed}, {"n", r.size}, {"attempts", r.attempts}, {"pore", r.pore}});
    }
    manifest["seeds"] = std::move(seeds);
    manifest["files"] = std::move(files);
    manifest["replicas"] = std::move(replicas);
    const fs::path manifest_path = dir / "manifest.json";
    auto f = open_output(manifest_path);
    f << manifest.dump(2) << '\n';
    finish(f, manifest_path);

    for (const auto& r : info) {
        fmt::print(out, "seed {}: n = {}, attempts = {}, pore = {}\n", r.seed, r.size, r.attempts,
                   format_number(r.pore));
    }
    fmt::print(out, "wrote {} replica(s) to {}\n", info.size(), dir.string());
    return 0;
}

RunConfig config_from_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw ParseError("cannot open manifest " + manifest.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(manifest.string() + ": " + e.what());
    }
    if (!j.contains("config_ini") || !j["config_ini"].is_string()) {
        throw ParseError(manifest.string() + ": missing config_ini");
    }
    std::istringstream ini(j["config_ini"].get<std::string>());
    RunConfig config = parse_config(ini, manifest.string());
    config.validate();
    return config;
}

int probe(const ProbeArgs& args, std::ostream& out) {
    std::ifstream in(args.packing);
    if (!in) throw Error("cannot open packing " + args.packing.string());
    const PackingFile file = read_packing_csv(in, args.packing.string());
    if (file.box.dim < 2 || file.box.dim > 4) throw ParseError("probe supports d = 2, 3, 4");
    const Packing packing = Packing::from_spheres(file.box, file.seed, file.spheres);
    const unsigned threads = resolve_threads(args.threads);
    const ProbeResult result = probe_insertions(packing, args.count, args.seed, threads);

    const int d = file.box.dim;
    const double n = static_cast<double>(packing.size());
    std::vector<std::function<double(double)>> cdfs;
    std::vector<std::string> names;
    for (SurfaceModelKind model : args.models) {
        cdfs.push_back(model_cdf(model, d, packing_moments(packing, model), n, packing.pore()));
        names.emplace_back(to_string(model));
    }
    const ProbeComparison comparison = compare_probe_to_model(result, cdfs);

    fs::create_directories(args.output_dir);
    const fs::path csv = args.output_dir / "probe_density.csv";
    {
        auto f = open_output(csv);
        write_probe_csv(f, comparison, names);
        finish(f, csv);
    }
    Json sidecar;
    sidecar["packing"] = args.packing.string();
    sidecar["n"] = packing.size();
    sidecar["count"] = args.count;
    sidecar["seed"] = args.seed;
    sidecar["attempts"] = result.attempts;
    sidecar["rejections"] = result.inside_rejections;
    sidecar["accepted"] = result.radii.size();
    sidecar["bins"] = comparison.table.size();
    Json ks = Json::object();
    for (std::size_t m = 0; m < names.size(); ++m) ks[names[m]] = comparison.ks_distance[m];
    sidecar["ks_distance"] = std::move(ks);
    const fs::path json_path = args.output_dir / "probe.json";
    auto f = open_output(json_path);
    f << sidecar.dump(2) << '\n';
    finish(f, json_path);

    fmt::print(out, "{} probes, {} accepted, {} rejected\n", result.attempts, result.radii.size(),
               result.inside_rejections);
    for (std::size_t m = 0; m < names.size(); ++m) {
        fmt::print(out, "KS distance {:<7} {:.6f}\n", names[m], comparison.ks_distance[m]);
    }
    return 0;
}

int solve(const SolveArgs& args, std::ostream& out) {
    std::vector<Json> lines;
    if (args.all) {
        for (SurfaceModelKind model : {SurfaceModelKind::UniformDistribution, SurfaceModelKind::IdenticalTwins}) {
            for (int d = 2; d <= 4; ++d) lines.push_back(solution_to_json(solve_exponents(model, d)));
        }
        for (int d = 2; d <= 4; ++d) {
            const ReferenceGammas ref = reference_gammas(d);
            lines.push_back({{"reference", "gamma"}, {"d", d}, {"ABK", ref.abk}, {"Ref22", ref.ref22}});
        }
    } else {
        if (args.dim < 2 || args.dim > 4) throw UsageError(fmt::format("--dim must be 2, 3 or 4 (got {})", args.dim));
        if (args.model == SurfaceModelKind::AffineRef22) throw UsageError("solve supports the ud and it models");
        lines.push_back(solution_to_json(solve_exponents(args.model, args.dim)));
    }
    std::string text;
    for (const auto& j : lines) text += j.dump() + '\n';
    out << text;
    if (args.output) {
        auto f = open_output(*args.output);
        f << text;
        finish(f, *args.output);
    }
    return 0;
}

std::vector<SnapshotSeries> load_snapshot_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("snapshots_") && name.ends_with(".jsonl")) {
            paths.push_back(entry.path());
        }
    }
    if (paths.empty()) throw PreconditionError("no snapshots_*.jsonl files in " + dir.string());
    std::sort(paths.begin(), paths.end());
    std::vector<SnapshotSeries> out;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw Error("cannot open " + p.string());
        out.push_back(read_snapshots_jsonl(in, p.string()));
    }
    return out;
}

int fit(const FitArgs& args, std::ostream& out) {
    const std::vector<SnapshotSeries> replicas = load_snapshot_dir(args.snapshot_dir);
    const EnsembleSeries ensemble = aggregate(replicas);
    const int d = ensemble.dim;

    std::vector<double> alphas = args.alphas;
    if (alphas.empty()) {
        for (double a : ensemble.alphas) {
            if (a < d) alphas.push_back(a);
        }
    }
    std::vector<SeriesFit> fits;
    for (double a : alphas) fits.push_back(fit_moment_series(ensemble, a, args.window));
    fits.push_back(fit_pore_series(ensemble, args.window));

    const fs::path dir = args.output_dir.value_or(args.snapshot_dir);
    fs::create_directories(dir);

    std::string fits_text;
    for (const auto& f : fits) fits_text += fit_to_json(f.alpha, f.series, f.fit, f.gamma).dump() + '\n';
    const fs::path fits_path = dir / "fits.jsonl";
    {
        auto f = open_output(fits_path);
        f << fits_text;
        finish(f, fits_path);
    }

    const fs::path slopes_path = dir / "slopes.csv";
    {
        auto f = open_output(slopes_path);
        f << 'n';
        for (double a : ensemble.alphas) f << ",dlnM_" << format_order(a) << ",se_" << format_order(a);
        f << ",dlnPhi,se_Phi\n";
        for (std::size_t k = 0; k < ensemble.n.size(); ++k) {
            f << format_number(ensemble.n[k]);
            for (const auto& s : ensemble.moment_slopes) f << ',' << format_number(s.mean[k]) << ',' << format_number(s.se[k]);
            f << ',' << format_number(ensemble.pore_slope.mean[k]) << ',' << format_number(ensemble.pore_slope.se[k])
              << '\n';
        }
        finish(f, slopes_path);
    }

    fmt::print(out, "{} replica(s), d = {}, {} checkpoints, window n in [{}, {}]\n", ensemble.replica_count, d,
               ensemble.n.size(), format_number(args.window.n_min), format_number(args.window.n_max));
    fmt::print(out, "{:<7} {:>5} {:>11} {:>10} {:>9} {:>9} {:>9} {:>6}\n", "series", "alpha", "lambda", "sigma",
               "gamma", "g_lo", "g_hi", "points");
    for (const auto& f : fits) {
        fmt::print(out, "{:<7} {:>5} {:>11.6f} {:>10.2e} {:>9.4f} {:>9.4f} {:>9.4f} {:>6}\n", f.series,
                   format_order(f.alpha), f.fit.lambda, f.fit.sigma_lambda, f.gamma.mode, f.gamma.lo, f.gamma.hi,
                   f.fit.points);
    }
    const auto unit = std::find_if(fits.begin(), fits.end(), [](const SeriesFit& f) { return f.alpha == 1.0; });
    if (unit != fits.end()) {
        const SeriesFit& pore = fits.back();
        const double predicted = lambda_alpha(d, unit->fit.lambda);
        fmt::print(out, "lambda_{} from pore minus d*lambda_1 - (d-1): {:.6f}\n", d, pore.fit.lambda - predicted);
    }

    const std::size_t last = ensemble.n.size() - 1;
    if (ensemble.cdfs[last]) {
        const double n = ensemble.n[last];
        const auto cdf = radius_cdf(ensemble, static_cast<std::uint64_t>(n));
        const fs::path cdf_path = dir / "cdf.csv";
        {
            auto f = open_output(cdf_path);
            f << "r,N\n";
            for (const auto& [r, count] : cdf) f << format_number(r) << ',' << format_number(count) << '\n';
            finish(f, cdf_path);
        }
        const SlopeEstimate s = cdf_slope(replicas, last, args.cdf_lo * n, args.cdf_hi * n, args.bootstrap_seed);
        Json j{{"n", n},           {"slope", s.slope}, {"gamma", s.gamma}, {"sigma", s.sigma},
               {"points", s.points}, {"r_lo", s.r_lo},   {"r_hi", s.r_hi},   {"count_window", {args.cdf_lo * n, args.cdf_hi * n}}};
        const fs::path slope_path = dir / "cdf_slope.json";
        auto f = open_output(slope_path);
        f << j.dump(2) << '\n';
        finish(f, slope_path);
        fmt::print(out, "CDF slope at n = {}: gamma = {:.4f} +- {:.4f} ({} edges, r in [{:.4g}, {:.4g}])\n",
                   format_number(n), s.gamma, s.sigma, s.points, s.r_lo, s.r_hi);
    }
    return 0;
}

int report(const ReportArgs& args, std::ostream& out) {
    struct Fitted {
        double lambda1;
        double sigma;
        GammaSummary gamma;
        std::size_t replicas;
        double n_max;
    };
    std::map<int, Fitted> fitted;
    for (const auto& dir : args.snapshot_dirs) {
        const auto replicas = load_snapshot_dir(dir);
        const EnsembleSeries ensemble = aggregate(replicas);
        const SeriesFit f = fit_moment_series(ensemble, 1.0, args.window);
        fitted[ensemble.dim] = {f.fit.lambda, f.fit.sigma_lambda, f.gamma, ensemble.replica_count, ensemble.n.back()};
    }

    Json rows = Json::array();
    fmt::print(out, "{:>2} {:<8} {:>8} {:>8} {:>8} {:>8} {:>16}\n", "d", "", "UD", "IT", "ABK", "Ref22", "simulation");
    for (int d = 2; d <= 4; ++d) {
        const MeanFieldSolution ud = solve_exponents(SurfaceModelKind::UniformDistribution, d);
        const MeanFieldSolution it = solve_exponents(SurfaceModelKind::IdenticalTwins, d);
        const ReferenceGammas ref = reference_gammas(d);
        const auto sim = fitted.find(d);
        std::string sim_lambda = "-";
        std::string sim_gamma = "-";
        Json row{{"d", d},
                 {"UD", {{"lambda1", ud.lambda1}, {"gamma", ud.gamma}}},
                 {"IT", {{"lambda1", it.lambda1}, {"gamma", it.gamma}}},
                 {"ABK", ref.abk},
                 {"Ref22", ref.ref22}};
        if (sim != fitted.end()) {
            const Fitted& s = sim->second;
            sim_lambda = fmt::format("{:.4f}({:.4f})", s.lambda1, s.sigma);
            sim_gamma = fmt::format("{:.4f}", s.gamma.mode);
            row["simulation"] = {{"lambda1", s.lambda1}, {"sigma", s.sigma},
                                 {"gamma", {{"mode", s.gamma.mode}, {"lo", s.gamma.lo}, {"hi", s.gamma.hi}}},
                                 {"replicas", s.replicas}, {"n", s.n_max}};
        }
        fmt::print(out, "{:>2} {:<8} {:>8.4f} {:>8.4f} {:>8} {:>8} {:>16}\n", d, "lambda1", ud.lambda1, it.lambda1,
                   "", "", sim_lambda);
        fmt::print(out, "{:>2} {:<8} {:>8.4f} {:>8.4f} {:>8.3f} {:>8.3f} {:>16}\n", "", "gamma", ud.gamma, it.gamma,
                   ref.abk, ref.ref22, sim_gamma);
        rows.push_back(std::move(row));
    }
    if (args.output) {
        auto f = open_output(*args.output);
        f << rows.dump(2) << '\n';
        finish(f, *args.output);
    }
    return 0;
}

}  // namespace rap::cli
