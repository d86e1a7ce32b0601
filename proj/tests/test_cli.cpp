#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

const std::string kCli = QGRAPH_CLI_PATH;

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "qgraph_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const int status = std::system((kCli + " " + args + " 2>/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json slurp_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

}  // namespace

TEST_CASE("validate succeeds on builtins and reports failures", "[cli]") {
    const auto dir = scratch_dir();
    const auto report = dir / "validate.json";
    REQUIRE(run_cli("validate --map doubling --out " + report.string()) == 0);
    const auto j = slurp_json(report);
    CHECK(j["measure_preserving"] == true);
    CHECK(j["endpoints_forward_invariant"] == true);
    CHECK(j["lcm_slope"] == 2);
    CHECK(j["failures"].empty());

    // a non-preserving inline map exits with the numerical-failure code
    const std::string bad =
        R"('{"M0": 2, "branches": [{"slope": 1, "intercept": "0/1"}, {"slope": 1, "intercept": "-1/2"}]}')";
    CHECK(run_cli("validate --map " + bad + " --out " + (dir / "bad.json").string()) == 3);
}

TEST_CASE("dump-b emits the exact rational matrix", "[cli]") {
    const auto dir = scratch_dir();
    const auto out = dir / "b.csv";
    REQUIRE(run_cli("dump-b --map doubling --level 1 --out " + out.string()) == 0);
    CHECK(slurp(out) ==
          "row,col,value\n"
          "1,1,1/2\n1,2,1/2\n"
          "2,3,1/2\n2,4,1/2\n"
          "3,1,1/2\n3,2,1/2\n"
          "4,3,1/2\n4,4,1/2\n");
}

TEST_CASE("quantize writes both container formats", "[cli]") {
    const auto dir = scratch_dir();
    const auto csv = dir / "u.csv";
    REQUIRE(run_cli("quantize --map tent --level 1 --format csv --out " + csv.string()) == 0);
    const std::string text = slurp(csv);
    CHECK(text.rfind("row,col,re,im\n", 0) == 0);
    CHECK(text.find("0.70710678118654746") != std::string::npos);

    const auto bin = dir / "u.bin";
    REQUIRE(run_cli("quantize --map tent --level 1 --format binary --out " + bin.string()) ==
            0);
    const std::string blob = slurp(bin);
    REQUIRE(blob.size() == 4 + 8 + 4 * 4 * 16);
    CHECK(blob.substr(0, 4) == "QGU1");
}

TEST_CASE("sweep runs are byte-identical and manifests replay", "[cli]") {
    const auto dir = scratch_dir();
    const auto first = dir / "sweep1.csv";
    const auto second = dir / "sweep2.csv";
    const std::string obs = R"('{"kind":"cosine","k":1}')";
    REQUIRE(run_cli("sweep --map doubling --obs " + obs + " --levels 1..3 --T-rule n --out " +
                    first.string()) == 0);
    REQUIRE(run_cli("sweep --map doubling --obs " + obs + " --levels 1..3 --T-rule n --out " +
                    second.string()) == 0);
    const std::string run1 = slurp(first);
    CHECK(run1 == slurp(second));
    CHECK(run1.rfind("n,M,mean,V_n,T,K,K_diag,V_T_classical\n", 0) == 0);

    // the manifest is itself a runnable config producing identical output
    const auto manifest = first.string() + ".manifest.json";
    auto config = slurp_json(manifest);
    config["out"] = (dir / "sweep3.csv").string();
    std::ofstream(dir / "replay.json") << config;
    REQUIRE(run_cli("run --config " + (dir / "replay.json").string()) == 0);
    CHECK(slurp(dir / "sweep3.csv") == run1);
}

TEST_CASE("constant observables sweep to an all-zero variance column", "[cli]") {
    const auto dir = scratch_dir();
    const auto out = dir / "const.csv";
    REQUIRE(run_cli("sweep --map tent --obs '{\"kind\":\"constant\",\"c\":2}' "
                    "--levels 1..2 --T-rule n --out " +
                    out.string()) == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        // V_n is the fourth column
        std::size_t pos = 0;
        for (int c = 0; c < 3; ++c) pos = line.find(',', pos) + 1;
        CHECK(line.substr(pos, line.find(',', pos) - pos) == "0");
    }
}

TEST_CASE("observable tables load from CSV files", "[cli]") {
    const auto dir = scratch_dir();
    const auto table = dir / "phi.csv";
    std::ofstream(table) << "x,phi\n0,0\n0.5,1\n1,0\n";
    const auto out = dir / "table_sweep.csv";
    const std::string obs = "'{\"kind\":\"user_table\",\"path\":\"" + table.string() +
                            "\",\"lipschitz\":2.0}'";
    REQUIRE(run_cli("sweep --map doubling --obs " + obs + " --levels 1..2 --T-rule n --out " +
                    out.string()) == 0);
    CHECK(slurp(out).rfind("n,M,mean,V_n,T,K,K_diag,V_T_classical\n", 0) == 0);
}

TEST_CASE("oracle pipeline passes its battery", "[cli]") {
    const auto dir = scratch_dir();
    const auto out = dir / "oracle.json";
    REQUIRE(run_cli("oracle --map doubling --obs '{\"kind\":\"cosine\",\"k\":1}' --level 2 "
                    "--T 3 --out " +
                    out.string()) == 0);
    const auto j = slurp_json(out);
    CHECK(j["pass"] == true);
    for (const auto& check : j["checks"]) {
        INFO(check["name"].get<std::string>());
        CHECK(check["pass"] == true);
    }
}

TEST_CASE("egorov pipeline emits per-level rows and a fit", "[cli]") {
    const auto dir = scratch_dir();
    const auto out = dir / "egorov.csv";
    REQUIRE(run_cli("egorov --map doubling --obs '{\"kind\":\"linear\"}' --levels 1..4 "
                    "--out " +
                    out.string()) == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("n,M,defect,block_max,fitted_exponent\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("metric-check emits the spectrum plus a summary row", "[cli]") {
    const auto dir = scratch_dir();
    const auto out = dir / "metric.csv";
    REQUIRE(run_cli("metric-check --bonds 4 --seed 7 --lambda-max-spacings 20 --out " +
                    out.string()) == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("lambda_n,bracket_k,matrix_element,weight\n", 0) == 0);
    CHECK(text.find("\nSUMMARY,") != std::string::npos);
}

TEST_CASE("error paths map to documented exit codes", "[cli]") {
    const auto dir = scratch_dir();
    CHECK(run_cli("sweep --map doubling --obs '{\"kind\":\"nope\"}' --levels 1..2 --out " +
                  (dir / "x.csv").string()) == 2);
    CHECK(run_cli("validate --map missing_file.json --out " + (dir / "x.json").string()) == 2);
    // a level too fine for dense matrices trips the resource budget
    CHECK(run_cli("sweep --map tripling --obs '{\"kind\":\"linear\"}' --levels 8..8 --out " +
                  (dir / "y.csv").string()) == 4);
}
