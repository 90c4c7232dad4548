#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rap/commands.hpp"
#include "rap/config.hpp"
#include "rap/error.hpp"

namespace {

std::vector<rap::SurfaceModelKind> parse_models(const std::string& text) {
    std::vector<rap::SurfaceModelKind> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(rap::parse_surface_model(item));
    }
    if (out.empty()) throw rap::UsageError("--models needs at least one model");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random Apollonian packings and their mean-field exponents"};
    app.set_version_flag("--version", rap::kVersion);
    app.require_subcommand(1);

    std::optional<unsigned> threads;

    // simulate
    auto* sim = app.add_subcommand("simulate", "grow replica packings and log moment snapshots");
    std::string config_path, manifest_path;
    std::vector<std::string> overrides;
    std::optional<int> sim_dim;
    std::optional<std::uint64_t> sim_count, sim_seed;
    std::optional<unsigned> sim_replicas;
    std::optional<double> sim_side;
    std::optional<std::string> sim_out;
    auto* cfg_opt = sim->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    sim->add_option("--manifest", manifest_path, "rerun the configuration stored in a manifest")
        ->check(CLI::ExistingFile)
        ->excludes(cfg_opt);
    sim->add_option("--dim", sim_dim, "dimension (2, 3 or 4)");
    sim->add_option("--side", sim_side, "box side L");
    sim->add_option("--count", sim_count, "spheres per packing");
    sim->add_option("--seed", sim_seed, "seed of the first replica");
    sim->add_option("--replicas", sim_replicas, "number of replicas");
    sim->add_option("--output-dir", sim_out, "output directory");
    sim->add_option("--set", overrides, "override a config key (key=value)");
    sim->add_option("--threads", threads, "worker threads (default: all cores, capped by RAP_THREADS)");

    // probe
    auto* probe = app.add_subcommand("probe", "test insertions into a frozen packing");
    rap::cli::ProbeArgs probe_args;
    std::string models = "ud,it,affine";
    std::string probe_packing, probe_out = ".";
    probe->add_option("packing", probe_packing, "packing CSV")->required()->check(CLI::ExistingFile);
    probe->add_option("--count", probe_args.count, "number of probes")->capture_default_str();
    probe->add_option("--seed", probe_args.seed, "probe seed")->capture_default_str();
    probe->add_option("--models", models, "comma-separated models: ud, it, affine")->capture_default_str();
    probe->add_option("--output-dir", probe_out, "output directory")->capture_default_str();
    probe->add_option("--threads", threads, "worker threads");

    // solve
    auto* solve = app.add_subcommand("solve", "solve the mean-field exponent systems");
    rap::cli::SolveArgs solve_args;
    std::string solve_model = "it", solve_output;
    auto* all_flag = solve->add_flag("--all", solve_args.all, "all six systems plus reference gammas");
    solve->add_option("--model", solve_model, "ud or it")->excludes(all_flag);
    solve->add_option("--dim", solve_args.dim, "dimension")->check(CLI::Range(2, 4))->excludes(all_flag);
    solve->add_option("--output", solve_output, "also write the JSON lines here");

    // fit
    auto* fit = app.add_subcommand("fit", "fit asymptotic exponents to snapshot ensembles");
    rap::cli::FitArgs fit_args;
    std::string fit_dir, fit_alphas, fit_out;
    fit->add_option("snapshots", fit_dir, "directory with snapshots_*.jsonl")->required()->check(CLI::ExistingDirectory);
    fit->add_option("--alphas", fit_alphas, "moment orders, e.g. 0.5,1,3/2 (default: all recorded below d)");
    fit->add_option("--n-min", fit_args.window.n_min, "smallest n in the fit window")->capture_default_str();
    fit->add_option("--n-max", fit_args.window.n_max, "largest n in the fit window");
    fit->add_option("--cdf-lo", fit_args.cdf_lo, "CDF slope window start, fraction of n")->capture_default_str();
    fit->add_option("--cdf-hi", fit_args.cdf_hi, "CDF slope window end, fraction of n")->capture_default_str();
    fit->add_option("--bootstrap-seed", fit_args.bootstrap_seed, "seed of the CDF slope bootstrap")
        ->capture_default_str();
    fit->add_option("--output-dir", fit_out, "output directory (default: the snapshot directory)");

    // report
    auto* report = app.add_subcommand("report", "mean-field exponents next to fitted simulation exponents");
    rap::cli::ReportArgs report_args;
    std::vector<std::string> report_dirs;
    std::string report_out;
    report->add_option("--snapshots", report_dirs, "snapshot directories (one per dimension)")
        ->check(CLI::ExistingDirectory);
    report->add_option("--n-min", report_args.window.n_min, "smallest n in the fit window")->capture_default_str();
    report->add_option("--output", report_out, "write the table as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) {
            rap::RunConfig config;
            if (!manifest_path.empty()) {
                config = rap::cli::config_from_manifest(manifest_path);
            } else if (!config_path.empty()) {
                config = rap::load_config(config_path);
            }
            if (sim_dim) config.dim = *sim_dim;
            if (sim_side) config.side = *sim_side;
            if (sim_count) config.count = *sim_count;
            if (sim_seed) config.seed = *sim_seed;
            if (sim_replicas) config.replicas = *sim_replicas;
            if (sim_out) config.output_dir = *sim_out;
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw rap::UsageError("--set expects key=value, got '" + kv + "'");
                rap::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
            }
            return rap::cli::simulate({config, threads}, std::cout);
        }
        if (*probe) {
            probe_args.packing = probe_packing;
            probe_args.output_dir = probe_out;
            probe_args.models = parse_models(models);
            probe_args.threads = threads;
            return rap::cli::probe(probe_args, std::cout);
        }
        if (*solve) {
            solve_args.model = rap::parse_surface_model(solve_model);
            if (!solve_output.empty()) solve_args.output = solve_output;
            return rap::cli::solve(solve_args, std::cout);
        }
        if (*fit) {
            fit_args.snapshot_dir = fit_dir;
            if (!fit_alphas.empty()) fit_args.alphas = rap::parse_orders(fit_alphas);
            if (!fit_out.empty()) fit_args.output_dir = fit_out;
            return rap::cli::fit(fit_args, std::cout);
        }
        if (*report) {
            for (const auto& d : report_dirs) report_args.snapshot_dirs.emplace_back(d);
            if (!report_out.empty()) report_args.output = report_out;
            return rap::cli::report(report_args, std::cout);
        }
    } catch (const rap::UsageError& e) {
        std::cerr << "rap: " << e.what() << '\n';
        return 2;
    } catch (const rap::ConvergenceError& e) {
        std::cerr << "rap: " << e.what() << " (residual " << e.residual() << ")\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "rap: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
