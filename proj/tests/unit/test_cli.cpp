#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rap/commands.hpp"
#include "rap/io.hpp"
#include "rap/packer.hpp"

using namespace rap;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rap_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run_rap(const std::string& args, const std::string& env = "") {
    const fs::path dir = scratch("io");
    const fs::path out = dir / "stdout", err = dir / "stderr";
    const std::string cmd =
        env + " " + RAP_BINARY + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("simulate writes packings, snapshots and a manifest that reproduces them") {
    const fs::path dir = scratch("sim");
    const fs::path cfg = dir / "cfg.ini";
    std::ofstream(cfg) << "[simulation]\ndim = 2\nside = 100\ncount = 10000\nseed = 5\n";
    const Run first = run_rap("simulate --config " + cfg.string() + " --output-dir " + (dir / "a").string());
    REQUIRE(first.status == 0);
    const std::string csv = slurp(dir / "a" / "packing_seed5.csv");
    CHECK(count_lines(csv) == 10000 + 3);
    const Json manifest = Json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest["seeds"] == Json::array({5}));
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest.contains("version"));
    CHECK(manifest["threads"].get<unsigned>() >= 1);

    const Run again = run_rap("simulate --manifest " + (dir / "a" / "manifest.json").string() + " --output-dir " +
                          (dir / "b").string() + " --threads 1");
    REQUIRE(again.status == 0);
    CHECK(slurp(dir / "b" / "packing_seed5.csv") == csv);
    CHECK(slurp(dir / "b" / "snapshots_seed5.jsonl") == slurp(dir / "a" / "snapshots_seed5.jsonl"));

    // fit the single replica and reject a missing order
    const Run fit = run_rap("fit " + (dir / "a").string() + " --n-min 100");
    CHECK(fit.status == 0);
    CHECK(fs::exists(dir / "a" / "fits.jsonl"));
    CHECK(fs::exists(dir / "a" / "slopes.csv"));
    CHECK(count_lines(slurp(dir / "a" / "fits.jsonl")) == 4);  // 0.5, 1, 1.5 and the pore
    const Run missing = run_rap("fit " + (dir / "a").string() + " --alphas 3");
    CHECK(missing.status != 0);
    CHECK(missing.err.find("available: 0.5, 1, 1.5, 2") != std::string::npos);
}

TEST_CASE("replicas get distinct seed-stamped files") {
    const fs::path dir = scratch("replicas");
    const Run r = run_rap("simulate --count 300 --seed 11 --replicas 8 --output-dir " + dir.string(), "RAP_THREADS=2");
    REQUIRE(r.status == 0);
    for (int s = 11; s < 19; ++s) {
        CHECK(fs::exists(dir / ("packing_seed" + std::to_string(s) + ".csv")));
        CHECK(fs::exists(dir / ("snapshots_seed" + std::to_string(s) + ".jsonl")));
    }
    CHECK(slurp(dir / "packing_seed11.csv") != slurp(dir / "packing_seed12.csv"));
    CHECK(Json::parse(slurp(dir / "manifest.json"))["files"].size() == 16);
}

TEST_CASE("simulate rejects bad configurations") {
    const fs::path dir = scratch("badcfg");
    std::ofstream(dir / "cfg.ini") << "dim = 2\nwidth = 3\n";
    const Run r = run_rap("simulate --config " + (dir / "cfg.ini").string());
    CHECK(r.status == 1);
    CHECK(r.err.find("width") != std::string::npos);
    CHECK(run_rap("simulate --dim 7 --output-dir " + dir.string()).status == 1);
}

TEST_CASE("probe of the shipped fixture") {
    const fs::path dir = scratch("probe");
    const std::string fixture = std::string(RAP_TEST_DATA) + "/packing_d2_n10000.csv";
    const Run r = run_rap("probe " + fixture + " --count 40000 --models ud,it,affine --output-dir " + dir.string());
    REQUIRE(r.status == 0);
    const std::string table = slurp(dir / "probe_density.csv");
    CHECK(count_lines(table) == 257);
    CHECK(table.starts_with("ln_r_bin_center,density,UD,IT,affine\n"));
    const Json sidecar = Json::parse(slurp(dir / "probe.json"));
    CHECK(sidecar["n"] == 10000);
    CHECK(sidecar["attempts"] == 40000);
    CHECK(sidecar["accepted"].get<std::uint64_t>() + sidecar["rejections"].get<std::uint64_t>() == 40000);
    CHECK(sidecar["ks_distance"].contains("IT"));

    const fs::path again = scratch("probe2");
    REQUIRE(run_rap("probe " + fixture + " --count 40000 --threads 2 --output-dir " + again.string()).status == 0);
    CHECK(slurp(again / "probe_density.csv") == table);

    CHECK(cli::ProbeArgs{}.count == 1'000'000);
}

TEST_CASE("malformed packing files are reported with their line") {
    const fs::path dir = scratch("malformed");
    std::ofstream(dir / "bad.csv") << "dim,side,seed\n2,10,1\nx1,x2,r\n1,1,0.5\n1,oops,0.5\n";
    const Run r = run_rap("probe " + (dir / "bad.csv").string() + " --count 10");
    CHECK(r.status == 1);
    CHECK(r.err.find("bad.csv:5:") != std::string::npos);
}

TEST_CASE("solve") {
    const Run one = run_rap("solve --model it --dim 2");
    REQUIRE(one.status == 0);
    const Json j = Json::parse(one.out);
    CHECK(j["model"] == "IT");
    CHECK(std::abs(j["lambda1"].get<double>() - 0.3614) < 5e-5);

    const Run all = run_rap("solve --all");
    REQUIRE(all.status == 0);
    CHECK(count_lines(all.out) == 9);
    CHECK(all.out.find("\"ABK\"") != std::string::npos);
    CHECK(all.out.find("\"Ref22\"") != std::string::npos);

    CHECK(run_rap("solve --model it --dim 5").status == 2);
    CHECK(run_rap("solve --bogus").status == 2);
    CHECK(run_rap("").status == 2);
}

TEST_CASE("fit recovers the exponent of a synthetic ensemble") {
    // M_1(n) with d ln M / d ln n = lambda + b (ln n)^c and 0.2% replica noise
    const double lambda = 0.37, b = 0.9, c = -1.4;
    const fs::path dir = scratch("synthetic");
    const auto grid = checkpoint_grid(2'000'000, 64);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        Philox4x64 rng(seed, 1);
        SnapshotSeries s;
        s.dim = 2;
        s.side = 1.0;
        s.seed = seed;
        s.alphas = {1.0};
        for (auto n : grid) {
            const double L = std::log(static_cast<double>(n));
            const double lnm = lambda * L + (n > 1 ? b * std::pow(L, c + 1.0) / (c + 1.0) : 0.0);
            Checkpoint cp;
            cp.n = n;
            cp.moments = {std::exp(lnm) * (1.0 + 0.002 * (rng.uniform() - 0.5))};
            cp.pore = 1.0 / (1.0 + static_cast<double>(n));
            s.checkpoints.push_back(cp);
        }
        std::ofstream out(dir / ("snapshots_seed" + std::to_string(seed) + ".jsonl"));
        write_snapshots_jsonl(out, s);
    }
    const Run r = run_rap("fit " + dir.string() + " --alphas 1");
    REQUIRE(r.status == 0);
    std::istringstream lines(slurp(dir / "fits.jsonl"));
    std::string first;
    std::getline(lines, first);
    const Json f = Json::parse(first);
    CHECK(f["alpha"] == 1.0);
    const double sigma = f["sigma"].get<double>();
    CHECK(sigma > 0.0);
    CHECK(std::abs(f["lambda"].get<double>() - lambda) < 3.0 * sigma);
}

TEST_CASE("report") {
    const Run r = run_rap("report");
    REQUIRE(r.status == 0);
    CHECK(r.out.find("lambda1") != std::string::npos);
    CHECK(r.out.find("2.5660") != std::string::npos);
}
