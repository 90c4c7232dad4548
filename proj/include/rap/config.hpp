#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rap/packer.hpp"

namespace rap {

/// Resolved settings of a `simulate` run. INI keys match the field names.
struct RunConfig {
    int dim = 2;
    double side = 100.0;
    std::uint64_t count = 10000;
    std::uint64_t seed = 1;
    unsigned replicas = 1;
    int checkpoints_per_decade = 64;
    int histogram_bins_per_decade = 256;
    bool histograms = true;
    std::vector<double> alphas;  // empty selects the defaults for dim
    std::string output_dir = "rap_out";
    std::size_t leaf_capacity = SphereTree::kDefaultLeafCapacity;
    std::uint64_t max_attempts = 1'000'000'000;

    /// Throws ParseError on d outside {2,3,4}, L <= 0, or zero replicas.
    void validate() const;
    /// Replica i runs with seed + i.
    SimulationConfig simulation(unsigned replica) const;
};

/// Sets one key from its textual value; throws ParseError on unknown keys.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// INI-style key=value text; keys may sit at top level or under [simulation].
RunConfig parse_config(std::istream& in, std::string_view source);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical INI text of a resolved configuration (fixed key order).
std::string to_ini(const RunConfig& config);

/// Orders written as decimals or fractions: "0.5,1,3/2".
std::vector<double> parse_orders(std::string_view text);

/// Requested worker count capped by RAP_THREADS; defaults to the core count.
unsigned resolve_threads(std::optional<unsigned> requested);

}  // namespace rap
