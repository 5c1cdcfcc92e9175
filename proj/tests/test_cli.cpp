#include "patlim/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using patlim::cli::run_command;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream o, e;
    int c = run_command(args, o, e);
    return {c, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / "patlim_cli_test";
    fs::create_directories(d);
    return d / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("enumerate") {
    auto r = run({"enumerate", "--p", "3", "--k", "1"});
    CHECK(r.code == 0);
    CHECK(r.out == "aaa\naab\naba\nabb\nabc\n");
    auto p2 = run({"enumerate", "--p", "2", "--k", "2", "--class", "p2"});
    CHECK(p2.code == 0);
    CHECK(p2.out == "ab,ab\nab,ba\n");
}

TEST_CASE("usage errors") {
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"count", "--link", "nonsense", "--sentence", "ab,ab", "--N", "4"}).code == 2);
    CHECK(run({"count", "--link", "toeplitz_abs", "--sentence", "ab,ab"}).code == 2);
    CHECK(run({"simulate", "--link", "toeplitz_abs", "--N", "8", "--R", "4", "--out", "/nonexistent_dir/x.csv"}).code == 2);
}

TEST_CASE("count") {
    auto r = run({"count", "--link", "toeplitz_abs", "--sentence", "abab", "--N", "6", "--variant", "star", "--unmasked"});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["value"] == "176");
    auto e = run({"count", "--link", "toeplitz_abs", "--sentence", "abab", "--N", "6", "--unmasked"});
    CHECK(nlohmann::json::parse(e.out)["value"] == "116");
    auto big = run({"count", "--link", "toeplitz_abs", "--sentence", "abcd,abcd", "--N", "4096", "--budget-nodes", "1000"});
    CHECK(big.code == 3);
}

TEST_CASE("theta and variance") {
    auto t = run({"theta", "--link", "reverse_circulant", "--p", "2"});
    CHECK(t.code == 0);
    CHECK(t.out.rfind("sentence,method,value,error,branches\n", 0) == 0);
    CHECK(t.out.find("\"aa,aa\",integral,1,") != std::string::npos);
    auto v = run({"variance", "--link", "reverse_circulant", "--p", "2"});
    REQUIRE(v.code == 0);
    auto j = nlohmann::json::parse(v.out);
    CHECK(j["sigma2"].get<double>() == doctest::Approx(2.0));
    auto r = run({"variance", "--link", "reverse_circulant", "--p", "2", "--kappa", "1"});
    CHECK(nlohmann::json::parse(r.out)["sigma2"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("check-gaussian") {
    auto ok = run({"check-gaussian", "--link", "toeplitz_abs", "--witness", "toeplitz_half"});
    REQUIRE(ok.code == 0);
    CHECK(nlohmann::json::parse(ok.out)["ok"] == true);
    auto bad = run({"check-gaussian", "--link", "hankel", "--witness", "full_image"});
    REQUIRE(bad.code == 0);
    auto j = nlohmann::json::parse(bad.out);
    CHECK(j["ok"] == false);
    CHECK(j.contains("failure"));
}

TEST_CASE("simulate with manifest and rerun") {
    auto out = scratch("sim.csv");
    fs::remove(out);
    auto r = run({"simulate", "--link", "toeplitz_abs", "--N", "24", "--p", "2", "--R", "30", "--seed", "11",
                  "--out", out.string()});
    REQUIRE(r.code == 0);
    auto body = slurp(out);
    CHECK(body.rfind("replicate,eta\n", 0) == 0);
    CHECK(count_lines(body) == 31);
    auto mpath = fs::path(out.string() + ".manifest.json");
    REQUIRE(fs::exists(mpath));
    auto m = nlohmann::json::parse(slurp(mpath));
    for (const char* key : {"tool", "version", "command", "argv", "environment", "config", "seeds", "started_utc",
                            "wall_clock_seconds", "outputs"})
        CHECK(m.contains(key));
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08x", patlim::cli::crc32_file(out.string()));
    CHECK(m["outputs"][0]["crc32"] == std::string(hex));
    CHECK(m["outputs"][0]["bytes"] == body.size());
    auto rr = run({"rerun", "--manifest", mpath.string()});
    CHECK(rr.code == 0);
    // A corrupted output checksum is a mismatch.
    m["outputs"][0]["crc32"] = "00000000";
    auto bad = scratch("bad.manifest.json");
    std::ofstream(bad) << m.dump();
    CHECK(run({"rerun", "--manifest", bad.string()}).code == 1);
}

TEST_CASE("seed from the environment") {
    auto a = run({"simulate", "--link", "hankel", "--N", "12", "--p", "2", "--R", "6", "--seed", "5"});
    ::setenv("PATLIM_SEED", "5", 1);
    auto b = run({"simulate", "--link", "hankel", "--N", "12", "--p", "2", "--R", "6"});
    ::unsetenv("PATLIM_SEED");
    auto c = run({"simulate", "--link", "hankel", "--N", "12", "--p", "2", "--R", "6", "--seed", "6"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
}

TEST_CASE("process and report") {
    auto p = run({"process", "--link", "symmetric_circulant", "--N", "16", "--p", "2", "--R", "4", "--grid", "0,0.5,1"});
    REQUIRE(p.code == 0);
    CHECK(p.out.rfind("replicate,t,kappa\n0,0,0\n", 0) == 0);
    CHECK(count_lines(p.out) == 13);
    CHECK(run({"process", "--link", "symmetric_circulant", "--N", "16", "--R", "4", "--grid", "0.5,1"}).code == 2);
    auto r = run({"report", "--link", "symmetric_circulant", "--p", "2", "--N", "32", "--R", "50"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    for (const char* key : {"config", "theory", "monte_carlo", "ks_distance_to_limit"}) CHECK(j.contains(key));
    CHECK(j["theory"]["sigma2"].get<double>() == doctest::Approx(4.0));
    CHECK(j["monte_carlo"]["moments"].contains("2"));
}
