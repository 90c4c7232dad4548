#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rap/analysis.hpp"
#include "rap/config.hpp"
#include "rap/error.hpp"
#include "rap/meanfield.hpp"

namespace rap {

inline constexpr const char* kVersion = "1.0.0";

/// Bad command-line usage; the front end exits with status 2.
class UsageError : public Error {
  public:
    using Error::Error;
};

namespace cli {

struct SimulateArgs {
    RunConfig config;
    std::optional<unsigned> threads;
};

/// Writes packing_seed<S>.csv and snapshots_seed<S>.jsonl per replica plus
/// manifest.json into config.output_dir.
int simulate(const SimulateArgs& args, std::ostream& out);

/// The resolved configuration stored in a manifest written by simulate().
RunConfig config_from_manifest(const std::filesystem::path& manifest);

struct ProbeArgs {
    std::filesystem::path packing;
    std::uint64_t count = 1'000'000;
    std::uint64_t seed = 1;
    std::vector<SurfaceModelKind> models{SurfaceModelKind::UniformDistribution, SurfaceModelKind::IdenticalTwins,
                                         SurfaceModelKind::AffineRef22};
    std::filesystem::path output_dir = ".";
    std::optional<unsigned> threads;
};

/// Writes probe_density.csv (256 log bins) and probe.json.
int probe(const ProbeArgs& args, std::ostream& out);

struct SolveArgs {
    bool all = false;
    SurfaceModelKind model = SurfaceModelKind::IdenticalTwins;
    int dim = 2;
    std::optional<std::filesystem::path> output;
};

/// One solution JSON, or with `all` the six systems and the reference
/// gammas as JSON lines.
int solve(const SolveArgs& args, std::ostream& out);

struct FitArgs {
    std::filesystem::path snapshot_dir;
    std::vector<double> alphas;  // empty fits every recorded order
    FitWindow window;
    // CDF slope window as fractions of the final n
    double cdf_lo = 1e-4;
    double cdf_hi = 1e-2;
    std::uint64_t bootstrap_seed = 1;
    std::optional<std::filesystem::path> output_dir;  // defaults to snapshot_dir
};

/// Reads every snapshots_*.jsonl of a directory, sorted by name.
std::vector<SnapshotSeries> load_snapshot_dir(const std::filesystem::path& dir);

/// Writes fits.jsonl, slopes.csv and cdf.csv.
int fit(const FitArgs& args, std::ostream& out);

struct ReportArgs {
    std::vector<std::filesystem::path> snapshot_dirs;
    FitWindow window;
    std::optional<std::filesystem::path> output;
};

/// Mean-field exponents next to the reference formulas and, for every
/// snapshot directory given, the fitted lambda_1 and gamma of its dimension.
int report(const ReportArgs& args, std::ostream& out);

}  // namespace cli
}  // namespace rap
