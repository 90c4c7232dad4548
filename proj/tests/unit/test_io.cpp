#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "rap/config.hpp"
#include "rap/error.hpp"
#include "rap/io.hpp"
#include "rap/packer.hpp"

using namespace rap;

namespace {

bool mentions(const std::exception& e, const std::string& text) {
    return std::string(e.what()).find(text) != std::string::npos;
}

}  // namespace

TEST_CASE("number formatting round-trips doubles") {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.5}) {
        CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
    }
    CHECK(format_order(0.5) == "0.5");
    CHECK(format_order(1.0) == "1");
    CHECK(format_order(1.5) == "1.5");
}

TEST_CASE("packing CSV round trip is byte identical") {
    for (int d = 2; d <= 4; ++d) {
        Packing p(BoxDomain(d, 37.5), 9);
        for (int i = 0; i < 1000; ++i) p.step();
        std::ostringstream first;
        write_packing_csv(first, p);
        std::istringstream in(first.str());
        const PackingFile file = read_packing_csv(in, "mem");
        CHECK(file.box.dim == d);
        CHECK(file.box.side == 37.5);
        CHECK(file.seed == 9);
        REQUIRE(file.spheres.size() == 1000);
        CHECK(file.spheres[17].radius == p.tree().sphere(17).radius);
        CHECK(file.spheres[17].center == p.tree().sphere(17).center);
        std::ostringstream second;
        write_packing_csv(second, file);
        CHECK(first.str() == second.str());
    }
}

TEST_CASE("malformed packing CSV names the offending line") {
    const std::string good = "dim,side,seed\n2,10,1\nx1,x2,r\n1,1,0.5\n";
    std::istringstream ok(good);
    CHECK(read_packing_csv(ok, "f.csv").spheres.size() == 1);

    auto error_of = [](const std::string& text) -> std::string {
        std::istringstream in(text);
        try {
            read_packing_csv(in, "f.csv");
        } catch (const ParseError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(error_of(good + "2,2,abc\n").starts_with("f.csv:5:"));
    CHECK(error_of(good + "2,2\n").starts_with("f.csv:5:"));
    CHECK(error_of(good + "2,2,-1\n").starts_with("f.csv:5:"));
    CHECK(error_of(good + "12,2,0.5\n").starts_with("f.csv:5:"));
    CHECK(error_of("dim,side,seed\n2,zz,1\n").starts_with("f.csv:2:"));
    CHECK(error_of("dim,side\n").starts_with("f.csv:1:"));
    CHECK(error_of("dim,side,seed\n2,10,1\nx1,x3,r\n").starts_with("f.csv:3:"));
    CHECK(error_of("").find("f.csv") == 0);
}

TEST_CASE("snapshot JSON lines round trip") {
    SimulationConfig c;
    c.dim = 3;
    c.count = 3000;
    c.seed = 4;
    c.checkpoints_per_decade = 8;
    const auto series = run(c).second;
    std::ostringstream first;
    write_snapshots_jsonl(first, series);
    std::istringstream in(first.str());
    const SnapshotSeries back = read_snapshots_jsonl(in, "s.jsonl");
    CHECK(back.dim == 3);
    CHECK(back.seed == 4);
    CHECK(back.alphas == series.alphas);
    REQUIRE(back.checkpoints.size() == series.checkpoints.size());
    for (std::size_t k = 0; k < back.checkpoints.size(); ++k) {
        CHECK(back.checkpoints[k].n == series.checkpoints[k].n);
        CHECK(back.checkpoints[k].moments == series.checkpoints[k].moments);
        CHECK(back.checkpoints[k].pore == series.checkpoints[k].pore);
        REQUIRE(back.checkpoints[k].histogram.has_value());
        CHECK(back.checkpoints[k].histogram->total() == series.checkpoints[k].n);
    }
    std::ostringstream second;
    write_snapshots_jsonl(second, back);
    CHECK(first.str() == second.str());

    std::istringstream broken(R"({"header":{"dim":2,"side":1,"seed":1,"alphas":[1]}})"
                              "\n{\"n\":1,\"M\":{\"2\":1},\"pore\":1}\n");
    try {
        read_snapshots_jsonl(broken, "b.jsonl");
        FAIL("accepted a checkpoint without the recorded order");
    } catch (const ParseError& e) {
        CHECK(mentions(e, "b.jsonl:2:"));
    }
}

TEST_CASE("solution and fit JSON schemas") {
    MeanFieldSolution s;
    s.d = 3;
    s.model = SurfaceModelKind::IdenticalTwins;
    s.lambda1 = 0.6;
    s.lambdas = {{1.0, 0.6}, {2.0, 0.2}};
    s.amplitudes = {{1.0, 1.0}, {2.0, 2.4}};
    s.gamma = 3.5;
    const Json j = solution_to_json(s);
    CHECK(j["model"] == "IT");
    CHECK(j["d"] == 3);
    CHECK(j["lambdas"]["2"] == 0.2);
    CHECK(j["amplitudes"]["2"] == 2.4);
    CHECK(j.contains("residual"));

    FitResult f;
    f.lambda = 0.36;
    f.window_lo = 1e3;
    f.window_hi = 2e6;
    const Json k = fit_to_json(1.0, "moment", f, GammaSummary{2.5, 2.4, 2.6, false});
    CHECK(k["alpha"] == 1.0);
    CHECK(k["window"][1] == 2e6);
    CHECK(k["gamma"]["mode"] == 2.5);
    for (const char* key : {"lambda", "sigma", "b", "c"}) CHECK(k.contains(key));
}

TEST_CASE("configuration parsing") {
    std::istringstream in("; comment\n[simulation]\ndim = 3\nside=50\ncount = 1000\nseed = 7\nreplicas = 4\n"
                          "alphas = 0.5, 1, 3/2\nhistograms = false\noutput_dir = out\n");
    const RunConfig c = parse_config(in, "cfg.ini");
    CHECK(c.dim == 3);
    CHECK(c.side == 50.0);
    CHECK(c.count == 1000);
    CHECK(c.seed == 7);
    CHECK(c.replicas == 4);
    CHECK(c.alphas == std::vector<double>{0.5, 1.0, 1.5});
    CHECK_FALSE(c.histograms);
    CHECK(c.output_dir == "out");
    CHECK(c.simulation(2).seed == 9);

    std::istringstream again(to_ini(c));
    const RunConfig d = parse_config(again, "round");
    CHECK(to_ini(d) == to_ini(c));

    std::istringstream top("dim = 2\ncount = 5\n");
    CHECK(parse_config(top, "t").count == 5);

    std::istringstream unknown("dim = 2\ncolour = red\n");
    CHECK_THROWS_AS(parse_config(unknown, "u"), ParseError);
    std::istringstream bad_value("count = many\n");
    CHECK_THROWS_AS(parse_config(bad_value, "b"), ParseError);

    RunConfig e;
    e.dim = 5;
    CHECK_THROWS_AS(e.validate(), ParseError);
    e.dim = 2;
    e.replicas = 0;
    CHECK_THROWS_AS(e.validate(), ParseError);
    e.replicas = 1;
    e.side = -1.0;
    CHECK_THROWS_AS(e.validate(), ParseError);

    CHECK(parse_orders("0.5,1,3/2") == std::vector<double>{0.5, 1.0, 1.5});
    CHECK_THROWS_AS(parse_orders("1/0"), ParseError);
    CHECK_THROWS_AS(parse_orders("x"), ParseError);
}

TEST_CASE("thread count resolution") {
    CHECK(resolve_threads(3u) >= 1u);
    CHECK(resolve_threads(1u) == 1u);
}

TEST_CASE("fnv1a64") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("packing CSV header values are validated") {
    std::istringstream in("dim,side,seed\n1,10,1\nx1,r\n");
    try {
        read_packing_csv(in, "h.csv");
        FAIL("accepted d = 1");
    } catch (const ParseError& e) {
        CHECK(mentions(e, "h.csv:2:"));
    }
}
