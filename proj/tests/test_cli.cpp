#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

std::string cli_path() {
    const char* p = std::getenv("QHLAB_CLI");
    REQUIRE_MESSAGE(p != nullptr, "QHLAB_CLI must point at the binary");
    return p;
}

std::string scenarios_dir() {
    const char* p = std::getenv("QHLAB_SCENARIOS");
    REQUIRE_MESSAGE(p != nullptr, "QHLAB_SCENARIOS must point at the configs");
    return p;
}

CmdResult run_cli(const std::string& args) {
    CmdResult r;
    const std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.output += buf;
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& leaf) {
    fs::path d = fs::temp_directory_path() / leaf;
    fs::remove_all(d);
    return d;
}

} // namespace

TEST_CASE("scatter reports the straight-line asymptote on the identity field") {
    CmdResult r = run_cli("scatter --point -1,2,1.5");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("x+=2,") != std::string::npos);
    CHECK(r.output.find("xi+=1.5") != std::string::npos);

    CmdResult j = run_cli("--json scatter --point -1,2,1.5");
    CHECK(j.exit_code == 0);
    auto doc = nlohmann::json::parse(j.output);
    CHECK(doc["x_pm"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(doc["xi_pm"].get<double>() == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(doc["residual"].get<double>() <= 1e-10);
}

TEST_CASE("partition and conjugation self-checks pass") {
    CmdResult part = run_cli("partition-check --samples 2000");
    CHECK(part.exit_code == 0);
    CHECK(part.output.find("PASS") != std::string::npos);

    CmdResult eg = run_cli("egorov-check --t 0.5");
    CHECK(eg.exit_code == 0);
    CHECK(eg.output.find("PASS") != std::string::npos);
}

TEST_CASE("detect separates the chirp's singular direction from a regular one") {
    const std::string common =
        "detect --data chirp --beta 1 --L 32 --N 1024 --radius 0.25 ";
    CmdResult on = run_cli(common + "--query 0.5,0.5");
    CHECK(on.exit_code == 0);
    CHECK(on.output.find("verdict = rapid-decay") == std::string::npos);

    CmdResult off = run_cli(common + "--query 0.5,-0.5");
    CHECK(off.exit_code == 0);
    CHECK(off.output.find("verdict = rapid-decay") != std::string::npos);
}

TEST_CASE("bundled scenarios verify with full agreement") {
    CmdResult fg =
        run_cli("verify --config " + scenarios_dir() + "/free-gaussian.cfg");
    CHECK(fg.exit_code == 0);
    CHECK(fg.output.find("agreement 4/4") != std::string::npos);

    CmdResult cor = run_cli("verify --config " + scenarios_dir() +
                            "/corollary-d1-bump.cfg");
    CHECK(cor.exit_code == 0);
    CHECK(cor.output.find("agreement 8/8") != std::string::npos);
}

TEST_CASE("run writes a deterministic report and a checkable manifest") {
    const std::string cfg = scenarios_dir() + "/corollary-d1-bump.cfg";
    fs::path out1 = fresh_dir("qhlab_cli_run_a");
    fs::path out2 = fresh_dir("qhlab_cli_run_b");

    CmdResult r1 = run_cli("run --config " + cfg + " --out " + out1.string());
    CHECK(r1.exit_code == 0);
    for (const char* f : {"report.json", "MANIFEST", "decay.svg", "orbits.svg",
                          "decay_cor_0.csv", "decay_ctl_7.csv"})
        CHECK_MESSAGE(fs::exists(out1 / f), f);

    CmdResult chk = run_cli("run --config " + cfg + " --out " +
                            out1.string() + " --check");
    CHECK(chk.exit_code == 0);
    CHECK(chk.output.find("MANIFEST OK") != std::string::npos);

    CmdResult r2 = run_cli("run --config " + cfg + " --out " + out2.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));

    auto doc = nlohmann::json::parse(slurp(out1 / "report.json"));
    CHECK(doc["report"]["n_agree"].get<int>() == 8);
    CHECK(doc["report"]["agreement_rate"].get<double>() == 1.0);

    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("diagnosable failures map to distinct exit codes") {
    fs::path bad = fs::temp_directory_path() / "qhlab_cli_bad.cfg";
    {
        std::ofstream os(bad);
        os << "[queries]\npoints = [oops\n";
    }
    CmdResult schema = run_cli("verify --config " + bad.string());
    CHECK(schema.exit_code == 2);
    CHECK(schema.output.find("schema error") != std::string::npos);
    fs::remove(bad);

    // probe center far outside the grid margin
    CmdResult margin = run_cli("detect --L 16 --query 30,1");
    CHECK(margin.exit_code == 4);
    CHECK(margin.output.find("margin violation") != std::string::npos);
}
