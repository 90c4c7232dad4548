#include "rap/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "rap/error.hpp"

namespace rap {

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

std::string format_order(double alpha) { return fmt::format("{}", alpha); }

namespace {

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_field(std::string_view field, std::string_view source, std::size_t line, std::string_view what) {
    field = trim(field);
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(fmt::format("{}:{}: cannot parse {} from '{}'", source, line, what, field));
    }
    return value;
}

}  // namespace

void write_packing_csv(std::ostream& out, const PackingFile& file) {
    const int d = file.box.dim;
    out << "dim,side,seed\n" << d << ',' << format_number(file.box.side) << ',' << file.seed << '\n';
    for (int i = 1; i <= d; ++i) out << 'x' << i << ',';
    out << "r\n";
    std::string row;
    for (const auto& s : file.spheres) {
        row.clear();
        for (int i = 0; i < d; ++i) {
            row += format_number(s.center[i]);
            row += ',';
        }
        row += format_number(s.radius);
        row += '\n';
        out << row;
    }
}

void write_packing_csv(std::ostream& out, const Packing& packing) {
    PackingFile file{packing.box(), packing.seed(), {}};
    file.spheres.reserve(packing.size());
    for (std::size_t id = 0; id < packing.size(); ++id) file.spheres.push_back(packing.tree().sphere(id));
    write_packing_csv(out, file);
}

PackingFile read_packing_csv(std::istream& in, std::string_view source) {
    std::string line;
    std::size_t lineno = 0;
    auto next = [&](std::string_view expect) {
        if (!std::getline(in, line)) throw ParseError(fmt::format("{}:{}: missing {}", source, lineno + 1, expect));
        ++lineno;
        return trim(line);
    };

    if (next("header") != "dim,side,seed") {
        throw ParseError(fmt::format("{}:1: expected header 'dim,side,seed'", source));
    }
    const auto meta = split(next("dim,side,seed values"));
    if (meta.size() != 3) throw ParseError(fmt::format("{}:2: expected 3 fields", source));
    const int dim = parse_field<int>(meta[0], source, 2, "dimension");
    const double side = parse_field<double>(meta[1], source, 2, "side");
    const auto seed = parse_field<std::uint64_t>(meta[2], source, 2, "seed");
    if (dim < 2 || dim > kMaxDim) throw ParseError(fmt::format("{}:2: unsupported dimension {}", source, dim));
    if (!(side > 0.0) || !std::isfinite(side)) throw ParseError(fmt::format("{}:2: side must be positive", source));
    PackingFile file{BoxDomain(dim, side), seed, {}};

    std::string expected_columns;
    for (int i = 1; i <= dim; ++i) expected_columns += fmt::format("x{},", i);
    expected_columns += "r";
    if (next("column header") != expected_columns) {
        throw ParseError(fmt::format("{}:3: expected column header '{}'", source, expected_columns));
    }

    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = trim(line);
        if (text.empty()) continue;
        const auto fields = split(text);
        if (fields.size() != static_cast<std::size_t>(dim) + 1) {
            throw ParseError(fmt::format("{}:{}: expected {} fields, found {}", source, lineno, dim + 1, fields.size()));
        }
        PointD center(dim);
        for (int i = 0; i < dim; ++i) center[i] = parse_field<double>(fields[static_cast<std::size_t>(i)], source, lineno, "coordinate");
        const double r = parse_field<double>(fields.back(), source, lineno, "radius");
        if (!(r > 0.0) || !std::isfinite(r)) throw ParseError(fmt::format("{}:{}: radius must be positive", source, lineno));
        if (!file.box.contains(center)) throw ParseError(fmt::format("{}:{}: center lies outside the box", source, lineno));
        file.spheres.emplace_back(center, r);
    }
    return file;
}

void write_snapshots_jsonl(std::ostream& out, const SnapshotSeries& series) {
    Json header;
    header["dim"] = series.dim;
    header["side"] = series.side;
    header["seed"] = series.seed;
    header["alphas"] = series.alphas;
    out << Json{{"header", header}}.dump() << '\n';

    for (const auto& cp : series.checkpoints) {
        Json line;
        line["n"] = cp.n;
        Json m = Json::object();
        for (std::size_t a = 0; a < series.alphas.size(); ++a) m[format_order(series.alphas[a])] = cp.moments.at(a);
        line["M"] = std::move(m);
        line["pore"] = cp.pore;
        line["attempts"] = cp.attempts;
        if (cp.histogram) {
            line["hist"] = Json{{"bins_per_decade", cp.histogram->bins_per_decade()},
                                {"first_bin", cp.histogram->first_bin()},
                                {"counts", cp.histogram->counts()}};
        }
        out << line.dump() << '\n';
    }
}

SnapshotSeries read_snapshots_jsonl(std::istream& in, std::string_view source) {
    SnapshotSeries series;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const Json j = Json::parse(line);
            if (j.contains("header")) {
                const Json& h = j.at("header");
                series.dim = h.at("dim").get<int>();
                series.side = h.at("side").get<double>();
                series.seed = h.at("seed").get<std::uint64_t>();
                series.alphas = h.at("alphas").get<std::vector<double>>();
                have_header = true;
                continue;
            }
            if (!have_header) throw ParseError(fmt::format("{}:{}: checkpoint before header", source, lineno));
            Checkpoint cp;
            cp.n = j.at("n").get<std::uint64_t>();
            const Json& m = j.at("M");
            for (double a : series.alphas) cp.moments.push_back(m.at(format_order(a)).get<double>());
            cp.pore = j.at("pore").get<double>();
            cp.attempts = j.value("attempts", std::uint64_t{0});
            if (j.contains("hist")) {
                const Json& h = j.at("hist");
                cp.histogram = RadiusHistogram(h.at("bins_per_decade").get<int>(), h.at("first_bin").get<std::int64_t>(),
                                               h.at("counts").get<std::vector<std::uint64_t>>());
            }
            if (!series.checkpoints.empty() && cp.n <= series.checkpoints.back().n) {
                throw ParseError(fmt::format("{}:{}: checkpoint n must increase", source, lineno));
            }
            series.checkpoints.push_back(std::move(cp));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(fmt::format("{}:{}: {}", source, lineno, e.what()));
        }
    }
    if (!have_header) throw ParseError(fmt::format("{}: missing header line", source));
    return series;
}

Json solution_to_json(const MeanFieldSolution& s) {
    Json j;
    j["model"] = std::string(to_string(s.model));
    j["d"] = s.d;
    j["lambda1"] = s.lambda1;
    Json lambdas = Json::object();
    for (const auto& [a, v] : s.lambdas) lambdas[format_order(a)] = v;
    j["lambdas"] = std::move(lambdas);
    Json amps = Json::object();
    for (const auto& [a, v] : s.amplitudes) amps[format_order(a)] = v;
    j["amplitudes"] = std::move(amps);
    j["gamma"] = s.gamma;
    j["residual"] = s.residual_norm;
    return j;
}

Json fit_to_json(double alpha, std::string_view series, const FitResult& fit, const GammaSummary& gamma) {
    Json j;
    j["alpha"] = alpha;
    j["series"] = std::string(series);
    j["lambda"] = fit.lambda;
    j["sigma"] = fit.sigma_lambda;
    j["b"] = fit.b;
    j["c"] = fit.c;
    j["chi2"] = fit.chi2;
    j["points"] = fit.points;
    j["window"] = {fit.window_lo, fit.window_hi};
    j["gamma"] = {{"mode", gamma.mode}, {"lo", gamma.lo}, {"hi", gamma.hi}, {"truncated", gamma.truncated}};
    return j;
}

void write_probe_csv(std::ostream& out, const ProbeComparison& comparison, std::span<const std::string> model_names) {
    out << "ln_r_bin_center,density";
    for (const auto& name : model_names) out << ',' << name;
    out << '\n';
    for (const auto& row : comparison.table) {
        out << format_number(row.ln_r) << ',' << format_number(row.empirical);
        for (double v : row.models) out << ',' << format_number(v);
        out << '\n';
    }
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace rap
