#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "triage/cli.hpp"

namespace fs = std::filesystem;
using triage::run_cli;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = run_cli(args, out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("triage_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
    CHECK(cli({}).status == 1);
    const auto bad = cli({"explode"});
    CHECK(bad.status == 1);
    CHECK_FALSE(bad.err.empty());
    CHECK(cli({"dedup", "--no-such-flag"}).status == 1);
}

TEST_CASE("seed is mandatory where randomness is used") {
    TempDir d("seed");
    CHECK(cli({"synth", "--synth", "10,5", "--out", d / "a"}).status == 1);
    CHECK(cli({"sweep", "--synth", "10,5", "--out", d / "b"}).status == 1);
    CHECK(cli({"synth", "--synth", "10,5", "--seed", "1", "--out", d / "c"}).status == 0);
    CHECK(cli({"train", "--input", d / "c/matrix.csv", "--out", d / "d"}).status == 1);
    CHECK(cli({"testsets", "--input", d / "c/matrix.csv", "--out", d / "e"}).status == 1);
}

TEST_CASE("dedup fixture") {
    TempDir d("dedup");
    write(d / "m.csv", ",a,b,c\nw,1,0,1\nx,0,1,1\ny,1,1,0\nz,0,1,1\n");
    REQUIRE(cli({"dedup", "--input", d / "m.csv", "--out", d / "o"}).status == 0);
    CHECK(line_count(d / "o/dedup.csv") == 4);
    const auto summary = nlohmann::json::parse(slurp(d / "o/dedup_summary.json"));
    CHECK(summary.dump().find("\"z\"") != std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(d / "o/manifest.json"));
    CHECK(manifest.at("command") == "dedup");
    CHECK(manifest.at("artifacts").contains("dedup.csv"));
}

TEST_CASE("malformed input names the file and line") {
    TempDir d("bad");
    write(d / "m.csv", ",a,b\nw,1,0\nx,7,1\n");
    const auto r = cli({"dedup", "--input", d / "m.csv", "--out", d / "o"});
    CHECK(r.status == 1);
    CHECK(r.err.find("m.csv") != std::string::npos);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(cli({"dedup", "--input", d / "missing.csv", "--out", d / "o"}).status != 0);
}

TEST_CASE("pipeline round trip") {
    TempDir d("pipe");
    REQUIRE(cli({"synth", "--synth", "30,12", "--seed", "4", "--out", d / "s"}).status == 0);
    const std::string matrix = d / "s/matrix.csv";
    REQUIRE(cli({"testsets", "--input", matrix, "--rates", "0.05,0.10", "--copies", "3", "--seed", "2",
                 "--out", d / "t"}).status == 0);
    CHECK(line_count(d / "t/patients_clean.csv") == 91);
    CHECK(line_count(d / "t/patients_rate_0.10.csv") == 91);

    REQUIRE(cli({"reduce", "--input", matrix, "--technique", "pca", "--k", "4", "--out", d / "r"}).status == 0);
    CHECK(fs::exists(d / "r/variance_explained.csv"));
    REQUIRE(cli({"reduce", "--input", matrix, "--technique", "first", "--k", "4", "--out", d / "f"}).status == 0);

    REQUIRE(cli({"train", "--input", matrix, "--technique", "pca", "--k", "4", "--hidden", "8", "--seed", "3",
                 "--max-epochs", "30", "--out", d / "m"}).status == 0);
    CHECK(line_count(d / "m/history.csv") >= 2);
    const auto p = cli({"predict", "--model", d / "m/model.json", "--reducer", d / "m/reducer.json", "--input",
                        d / "t/patients_rate_0.05.csv", "--top", "2", "--out", d / "p"});
    REQUIRE(p.status == 0);
    CHECK(line_count(d / "p/predictions.csv") == 1 + 90 * 2);

    // A reducer fitted elsewhere does not match the model.
    CHECK(cli({"predict", "--model", d / "m/model.json", "--reducer", d / "f/reducer.json", "--input", matrix,
               "--out", d / "q"}).status == 1);
}

TEST_CASE("sweep, report and determinism") {
    TempDir d("sweep");
    write(d / "cfg.txt", "# small grid\nsynth = 20,8\nk = 4\nhidden = 6:12:6\nmodels_per_size = 2\n"
                         "max_epochs = 20\ncopies = 3\ntechnique = all,variance,pca\nseed = 99\n");
    const std::vector<std::string> base{"sweep", "--config", d / "cfg.txt", "--seed", "7", "--replication", "1,2"};
    auto first = base, second = base;
    first.insert(first.end(), {"--out", d / "a"});
    second.insert(second.end(), {"--out", d / "b", "--workers", "2"});
    REQUIRE(cli(first).status == 0);
    REQUIRE(cli(second).status == 0);
    for (const char* f : {"report.json", "table1.csv", "table2.csv", "fig4.csv", "fig8.csv", "fig9.csv",
                          "fig10.csv"}) {
        CAPTURE(f);
        CHECK(slurp(d.path / "a" / f) == slurp(d.path / "b" / f));
    }
    const auto report = nlohmann::json::parse(slurp(d / "a/report.json"));
    CHECK(report.at("spec").at("base_seed") == 7);  // flag beats the config file
    CHECK(line_count(d / "a/table1.csv") == 4);

    REQUIRE(cli({"report", "--report", d / "a/report.json", "--out", d / "c"}).status == 0);
    CHECK(slurp(d / "c/table2.csv") == slurp(d / "a/table2.csv"));
    CHECK(slurp(d / "c/fig8.csv") == slurp(d / "a/fig8.csv"));
}

}
