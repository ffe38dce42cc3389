#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// the CLI binary sits next to this test binary's tree: tools/dqpe
fs::path cli_path() {
    // CMake configures both under the same build root
    const fs::path guess = fs::path(CLI_BINARY);
    REQUIRE(fs::exists(guess));
    return guess;
}

int run(const std::string& args) {
    return std::system((cli_path().string() + " " + args + " > /dev/null 2>&1").c_str());
}

int exit_code(int system_status) {
#ifdef WEXITSTATUS
    return WEXITSTATUS(system_status);
#else
    return system_status;
#endif
}

}  // namespace

TEST_CASE("distribution subcommand writes a parent CSV and resolved config", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "dqpe_cli_dist";
    fs::remove_all(dir);
    const int rc = run("distribution --phases 0.25:1.0 -t 4 -o " + dir.string());
    CHECK(exit_code(rc) == 0);
    CHECK(fs::exists(dir / "distribution" / "parent.csv"));
    CHECK(fs::exists(dir / "distribution" / "resolved_config.json"));

    // one-hot on-grid phase: probability 1 at index 4
    std::ifstream csv(dir / "distribution" / "parent.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "index,phase,probability");
    bool found = false;
    while (std::getline(csv, line))
        if (line.rfind("4,", 0) == 0 && line.find(",1") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("estimate subcommand honors sampled reproducibility", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "dqpe_cli_est";
    fs::remove_all(dir);
    const std::string common =
        "estimate --phases 0.312:0.9,0.62:0.1 -t 10 --shots 5000 --seed 9 -o ";
    REQUIRE(exit_code(run(common + (dir / "a").string())) == 0);
    REQUIRE(exit_code(run(common + (dir / "b").string())) == 0);

    const auto load = [](const fs::path& p) {
        std::ifstream in(p);
        json j;
        in >> j;
        return j;
    };
    const json a = load(dir / "a" / "estimate" / "estimate.json");
    const json b = load(dir / "b" / "estimate" / "estimate.json");
    CHECK(a == b);
    CHECK(a.at("estimate").at("estimator_name") == "gce");
}

TEST_CASE("config errors exit with code 2 and numerical sources with 3", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "dqpe_cli_err";
    fs::remove_all(dir);
    // no molecule source
    CHECK(exit_code(run("estimate -o " + dir.string())) == 2);
    // two sources at once
    CHECK(exit_code(run("estimate --phases 0.1:1 --xyz missing.xyz -o " + dir.string())) ==
          2);
    // bad t
    CHECK(exit_code(run("estimate --phases 0.1:1 -t 40 -o " + dir.string())) == 2);
}

TEST_CASE("config file values are applied and flags override them", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "dqpe_cli_cfg";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.json");
        cfg << R"({"phases": "0.25:1.0", "t": 4})";
    }
    const int rc = run("distribution --config " + (dir / "run.json").string() + " -t 5 -o " +
                       dir.string());
    CHECK(exit_code(rc) == 0);
    std::ifstream in(dir / "distribution" / "resolved_config.json");
    json resolved;
    in >> resolved;
    CHECK(resolved.at("phases") == "0.25:1.0");  // from file
    CHECK(resolved.at("t") == 5);                // flag wins
}

TEST_CASE("stats subcommand emits the cost report", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "dqpe_cli_stats";
    fs::remove_all(dir);
    const int rc = run(
        "stats --t 13 --epsilon 0.001 --gate-count 100 --n-params 9 "
        "--theta-magnitude 0.99 --stencil-one-norm 2.0 -o " +
        dir.string());
    CHECK(exit_code(rc) == 0);
    std::ifstream in(dir / "stats" / "cost_report.json");
    json j;
    in >> j;
    CHECK(j.at("total_queries").get<long long>() ==
          100LL * 13 * 9 * j.at("n_shots_gradient").get<long long>());
}
