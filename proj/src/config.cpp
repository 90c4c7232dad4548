#include "rap/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "rap/error.hpp"
#include "rap/io.hpp"

namespace rap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
    text = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(fmt::format("config key '{}': cannot parse '{}'", key, text));
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ParseError(fmt::format("config key '{}': expected a boolean, got '{}'", key, text));
}

}  // namespace

std::vector<double> parse_orders(std::string_view text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string_view item =
            trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) {
            const std::size_t slash = item.find('/');
            double value = 0.0;
            if (slash == std::string_view::npos) {
                value = parse_value<double>("alphas", item);
            } else {
                const double num = parse_value<double>("alphas", item.substr(0, slash));
                const double den = parse_value<double>("alphas", item.substr(slash + 1));
                if (den == 0.0) throw ParseError("alphas: zero denominator");
                value = num / den;
            }
            if (!(value >= 0.0)) throw ParseError("alphas: orders must be >= 0");
            out.push_back(value);
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void RunConfig::validate() const {
    if (dim < 2 || dim > 4) throw ParseError(fmt::format("dim must be 2, 3 or 4 (got {})", dim));
    if (!(side > 0.0) || !std::isfinite(side)) throw ParseError("side must be positive");
    if (replicas < 1) throw ParseError("replicas must be at least 1");
    if (checkpoints_per_decade < 1) throw ParseError("checkpoints_per_decade must be positive");
    if (histogram_bins_per_decade < 1) throw ParseError("histogram_bins_per_decade must be positive");
    if (leaf_capacity < 2) throw ParseError("leaf_capacity must be at least 2");
    if (max_attempts < 1) throw ParseError("max_attempts must be positive");
    for (double a : alphas) {
        if (a > dim) throw ParseError(fmt::format("moment order {} exceeds the dimension", a));
    }
}

SimulationConfig RunConfig::simulation(unsigned replica) const {
    SimulationConfig s;
    s.dim = dim;
    s.side = side;
    s.count = count;
    s.seed = seed + replica;
    s.alphas = alphas.empty() ? default_alphas(dim) : alphas;
    s.checkpoints_per_decade = checkpoints_per_decade;
    s.histogram_bins_per_decade = histogram_bins_per_decade;
    s.record_histograms = histograms;
    s.leaf_capacity = leaf_capacity;
    s.max_attempts_per_step = max_attempts;
    return s;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    if (key == "dim") c.dim = parse_value<int>(key, value);
    else if (key == "side") c.side = parse_value<double>(key, value);
    else if (key == "count") c.count = parse_value<std::uint64_t>(key, value);
    else if (key == "seed") c.seed = parse_value<std::uint64_t>(key, value);
    else if (key == "replicas") c.replicas = parse_value<unsigned>(key, value);
    else if (key == "checkpoints_per_decade") c.checkpoints_per_decade = parse_value<int>(key, value);
    else if (key == "histogram_bins_per_decade") c.histogram_bins_per_decade = parse_value<int>(key, value);
    else if (key == "histograms") c.histograms = parse_bool(key, value);
    else if (key == "alphas") c.alphas = parse_orders(value);
    else if (key == "output_dir") c.output_dir = std::string(trim(value));
    else if (key == "leaf_capacity") c.leaf_capacity = parse_value<std::size_t>(key, value);
    else if (key == "max_attempts") c.max_attempts = parse_value<std::uint64_t>(key, value);
    else throw ParseError(fmt::format("unknown config key '{}'", key));
}

RunConfig parse_config(std::istream& in, std::string_view source) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(fmt::format("{}:{}: {}", source, e.line(), e.message()));
    }
    RunConfig config;
    for (const auto& [key, node] : tree) {
        if (node.empty()) {
            apply_setting(config, key, node.data());
        } else if (key == "simulation") {
            for (const auto& [sub, leaf] : node) apply_setting(config, sub, leaf.data());
        } else {
            throw ParseError(fmt::format("{}: unknown section [{}]", source, key));
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    return parse_config(in, path.string());
}

std::string to_ini(const RunConfig& c) {
    std::string alphas;
    for (double a : c.alphas.empty() ? default_alphas(c.dim) : c.alphas) {
        alphas += (alphas.empty() ? "" : ",") + format_order(a);
    }
    return fmt::format(
        "[simulation]\n"
        "dim = {}\nside = {}\ncount = {}\nseed = {}\nreplicas = {}\n"
        "checkpoints_per_decade = {}\nhistogram_bins_per_decade = {}\nhistograms = {}\n"
        "alphas = {}\noutput_dir = {}\nleaf_capacity = {}\nmax_attempts = {}\n",
        c.dim, format_number(c.side), c.count, c.seed, c.replicas, c.checkpoints_per_decade,
        c.histogram_bins_per_decade, c.histograms ? "true" : "false", alphas, c.output_dir, c.leaf_capacity,
        c.max_attempts);
}

unsigned resolve_threads(std::optional<unsigned> requested) {
    unsigned threads = requested.value_or(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("RAP_THREADS")) {
        unsigned cap = 0;
        const std::string_view text(env);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
        if (ec == std::errc() && ptr == text.data() + text.size() && cap > 0) threads = std::min(threads, cap);
    }
    return std::max(1u, threads);
}

}  // namespace rap
