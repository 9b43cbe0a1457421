#include <doctest.h>

#include <cstdlib>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "copcp/cli.hpp"

using namespace copcp;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("copcp_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kConfig = R"({
  "dataset": "data.csv",
  "targets": ["t1", "t2"],
  "regressor": {"kind": "ridge"},
  "error_model": {"kind": "knn", "k": 10},
  "folds": 3,
  "seed": 11
})";

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("synth then run then report") {
        const auto dir = fresh_dir("flow");
        auto r = cli({"synth", "--n", "300", "--m", "2", "--dependence", "0.6", "--seed", "1", "--out",
                      (dir / "data.csv").string()});
        REQUIRE(r.code == 0);
        write(dir / "config.json", kConfig);
        r = cli({"run", "--config", (dir / "config.json").string(), "--jobs", "2"});
        CHECK(r.code == 0);
        CHECK(r.out.find("empirical") != std::string::npos);
        for (const char* f : {"out/report.json", "out/curves.csv", "out/plots/validity.svg", "out/plots/volumes.svg"})
            CHECK(std::filesystem::is_regular_file(dir / f));

        r = cli({"report", (dir / "out/report.json").string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("gumbel") != std::string::npos);

        // overrides: copula subset, folds, output directory
        r = cli({"run", "--config", (dir / "config.json").string(), "--copula", "independent", "--folds", "2", "--out",
                 (dir / "alt").string()});
        CHECK(r.code == 0);
        std::ifstream in(dir / "alt/report.json");
        const auto j = nlohmann::json::parse(in);
        CHECK(j["fold_count"] == 2);
        CHECK(j["summary"].size() == 1);
    }

    TEST_CASE("seed precedence: flag over environment over config") {
        const auto dir = fresh_dir("seed");
        REQUIRE(cli({"synth", "--n", "200", "--m", "2", "--dependence", "0.3", "--seed", "2", "--out",
                     (dir / "data.csv").string()})
                    .code == 0);
        write(dir / "config.json", kConfig);
        const auto seed_of = [&](const std::string& out) {
            std::ifstream in(dir / out / "report.json");
            return nlohmann::json::parse(in)["config"]["seed"].get<std::uint64_t>();
        };
        ::setenv("CC_SEED", "21", 1);
        CHECK(cli({"run", "--config", (dir / "config.json").string(), "--out", (dir / "a").string()}).code == 0);
        CHECK(seed_of("a") == 21);
        CHECK(cli({"run", "--config", (dir / "config.json").string(), "--out", (dir / "b").string(), "--seed", "5"})
                  .code == 0);
        CHECK(seed_of("b") == 5);
        ::unsetenv("CC_SEED");
        CHECK(cli({"run", "--config", (dir / "config.json").string(), "--out", (dir / "c").string()}).code == 0);
        CHECK(seed_of("c") == 11);
    }

    TEST_CASE("usage and input errors exit 2") {
        const auto dir = fresh_dir("errors");
        CHECK(cli({}).code == 2);
        CHECK(cli({"frobnicate"}).code == 2);
        CHECK(cli({"run"}).code == 2);
        CHECK(cli({"run", "--config", (dir / "missing.json").string()}).code == 2);

        write(dir / "config.json", kConfig);
        auto r = cli({"run", "--config", (dir / "config.json").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("dataset") != std::string::npos);

        write(dir / "data.csv", "x1,t1\n1,2\n");
        r = cli({"run", "--config", (dir / "config.json").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("t2") != std::string::npos);

        write(dir / "bad.json", "{\"dataset\": \"data.csv\",\n \"targets\": [\"t1\"],\n \"bogus\": 1}");
        r = cli({"run", "--config", (dir / "bad.json").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("bad.json:3") != std::string::npos);

        CHECK(cli({"run", "--config", (dir / "config.json").string(), "--copula", "clayton"}).code == 2);
        CHECK(cli({"synth", "--n", "100", "--m", "2", "--dependence", "1.0", "--seed", "1", "--out",
                   (dir / "x.csv").string()})
                  .code == 2);
        CHECK(cli({"synth", "--n", "100", "--m", "2", "--dependence", "-0.1", "--seed", "1", "--out",
                   (dir / "x.csv").string()})
                  .code == 2);

        write(dir / "report.json", "{not json");
        CHECK(cli({"report", (dir / "report.json").string()}).code == 2);
        CHECK(cli({"report", (dir / "nope.json").string()}).code == 2);
        CHECK(cli({"--help"}).code == 0);
    }

    TEST_CASE("a dataset too small for the folds is a runtime failure") {
        const auto dir = fresh_dir("small");
        REQUIRE(cli({"synth", "--n", "10", "--m", "2", "--dependence", "0.3", "--seed", "2", "--out",
                     (dir / "data.csv").string()})
                    .code == 0);
        write(dir / "config.json", kConfig);
        const auto r = cli({"run", "--config", (dir / "config.json").string(), "--folds", "5"});
        CHECK(r.code != 0);
        CHECK(!r.err.empty());
    }

    TEST_CASE("synth output shape and determinism") {
        const auto dir = fresh_dir("synth");
        const auto args = [&](const std::string& name) {
            return std::vector<std::string>{"synth", "--n", "100", "--m", "2", "--d", "4", "--dependence", "0.5",
                                            "--seed", "8", "--out", (dir / name).string()};
        };
        REQUIRE(cli(args("a.csv")).code == 0);
        REQUIRE(cli(args("b.csv")).code == 0);
        const auto slurp = [&](const std::string& name) {
            std::ifstream in(dir / name);
            std::stringstream s;
            s << in.rdbuf();
            return s.str();
        };
        const std::string a = slurp("a.csv");
        CHECK(a == slurp("b.csv"));
        std::istringstream lines(a);
        std::string header;
        std::getline(lines, header);
        CHECK(std::count(header.begin(), header.end(), ',') == 4 + 2 - 1);
        int rows = 0;
        for (std::string line; std::getline(lines, line);) ++rows;
        CHECK(rows == 100);
    }

    TEST_CASE("invalid copula names are echoed back") {
        const auto dir = fresh_dir("clayton");
        REQUIRE(cli({"synth", "--n", "100", "--m", "2", "--dependence", "0.2", "--seed", "1", "--out",
                     (dir / "data.csv").string()})
                    .code == 0);
        std::string config = kConfig;
        config.insert(config.find("\"folds\""), "\"copulas\": [\"clayton\"],\n  ");
        write(dir / "config.json", config);
        const auto r = cli({"run", "--config", (dir / "config.json").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("clayton") != std::string::npos);
    }

    TEST_CASE("report summary rows follow the configured copulas") {
        const auto dir = fresh_dir("rows");
        REQUIRE(cli({"synth", "--n", "200", "--m", "2", "--dependence", "0.2", "--seed", "1", "--out",
                     (dir / "data.csv").string()})
                    .code == 0);
        write(dir / "config.json", kConfig);
        REQUIRE(cli({"run", "--config", (dir / "config.json").string(), "--copula", "empirical", "--copula",
                     "independent", "--copula", "gumbel"})
                    .code == 0);
        auto r = cli({"report", (dir / "out/report.json").string()});
        REQUIRE(r.code == 0);
        const auto e = r.out.find("\nempirical"), i = r.out.find("\nindependent"), g = r.out.find("\ngumbel");
        CHECK(e != std::string::npos);
        CHECK(e < i);
        CHECK(i < g);

        REQUIRE(cli({"run", "--config", (dir / "config.json").string(), "--copula", "gumbel", "--out",
                     (dir / "one").string()})
                    .code == 0);
        r = cli({"report", (dir / "one/report.json").string()});
        CHECK(r.out.find("\ngumbel") != std::string::npos);
        CHECK(r.out.find("\nindependent") == std::string::npos);
        CHECK(r.out.find("\nempirical") == std::string::npos);
    }
}
