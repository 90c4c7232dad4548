#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rap/analysis.hpp"
#include "rap/meanfield.hpp"
#include "rap/packer.hpp"

namespace rap {

using Json = nlohmann::ordered_json;

/// 17 significant digits, enough for an exact double round trip.
std::string format_number(double x);
/// Shortest decimal form of a moment order ("0.5", "1", "1.5").
std::string format_order(double alpha);

// Packing CSV:
//   dim,side,seed
//   <d>,<L>,<seed>
//   x1,...,xd,r
//   one row per sphere in insertion order
struct PackingFile {
    BoxDomain box{2, 1.0};
    std::uint64_t seed = 0;
    std::vector<Sphere> spheres;
};
void write_packing_csv(std::ostream& out, const Packing& packing);
void write_packing_csv(std::ostream& out, const PackingFile& file);
/// Throws ParseError naming `source` and the offending line.
PackingFile read_packing_csv(std::istream& in, std::string_view source);

// Snapshot JSON-lines: a {"header":{...}} line, then one checkpoint per line:
//   {"n":..,"M":{"0.5":..,"1":..},"pore":..,"attempts":..,"hist":{..}}
void write_snapshots_jsonl(std::ostream& out, const SnapshotSeries& series);
SnapshotSeries read_snapshots_jsonl(std::istream& in, std::string_view source);

Json solution_to_json(const MeanFieldSolution& solution);
Json fit_to_json(double alpha, std::string_view series, const FitResult& fit, const GammaSummary& gamma);

/// ln_r_bin_center,density followed by one column per model name.
void write_probe_csv(std::ostream& out, const ProbeComparison& comparison, std::span<const std::string> model_names);

/// 64-bit FNV-1a, used to fingerprint resolved configurations.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace rap
