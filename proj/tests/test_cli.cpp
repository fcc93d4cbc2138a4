#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct CliResult {
    int exitCode = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SISTAB_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// last value per key of a machine-format report; repeated keys counted apart
std::map<std::string, std::string> kv_of(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

std::size_t count_key(const std::string& text, const std::string& key) {
    std::size_t n = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + "=", 0) == 0) ++n;
    return n;
}

double num(const std::map<std::string, std::string>& m, const std::string& key) {
    auto it = m.find(key);
    REQUIRE(it != m.end());
    return std::stod(it->second);
}

}  // namespace

TEST_CASE("enumerate lists the fiber and reports its size") {
    auto r = run_cli("enumerate breslow-day-35-44 --format machine");
    CHECK(r.exitCode == 0);
    auto m = kv_of(r.out);
    CHECK(m.at("fiber_size") == "25");
    CHECK(count_key(r.out, "table") == 25);
    // tables are distinct and have one entry per cell
    std::set<std::string> seen;
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("table=", 0) != 0) continue;
        seen.insert(line);
        std::istringstream row(line.substr(6));
        std::string tok;
        std::size_t entries = 0;
        while (row >> tok) ++entries;
        CHECK(entries == 32);
    }
    CHECK(seen.size() == 25);

    auto small = run_cli("enumerate breslow-day-35-44 --size-only --format machine");
    CHECK(count_key(small.out, "table") == 0);
    CHECK(kv_of(small.out).at("fiber_size") == "25");
}

TEST_CASE("count estimates cover the known fiber size") {
    auto r = run_cli("count breslow-day-35-44 --samples 400 --seed 2 --format machine");
    REQUIRE(r.exitCode == 0);
    auto m = kv_of(r.out);
    CHECK(m.at("valid") == "400");
    CHECK(m.at("proposal") == "uniform");
    const double est = num(m, "estimate");
    const double se = num(m, "se");
    CHECK(est > 0.0);
    CHECK(se > 0.0);
    CHECK(std::abs(est - 25.0) <= 3.0 * se);
}

TEST_CASE("identical invocations give byte-identical reports") {
    const std::string cmd =
        "count czech-autoworkers --samples 200 --seed 9 --format machine";
    auto a = run_cli(cmd);
    auto b = run_cli(cmd);
    auto c = run_cli(cmd + " --jobs 3");
    REQUIRE(a.exitCode == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);  // worker count never changes the draws
    auto other = run_cli(
        "count czech-autoworkers --samples 200 --seed 10 --format machine");
    CHECK(a.out != other.out);
}

TEST_CASE("pvalue runs the exact-test estimator") {
    auto r = run_cli("pvalue breslow-day-35-44 --samples 300 --seed 3 --format machine");
    REQUIRE(r.exitCode == 0);
    auto m = kv_of(r.out);
    CHECK(m.at("proposal") == "hypergeometric");
    CHECK(m.at("target") == "hypergeometric");
    const double p = num(m, "pvalue");
    CHECK(p > 0.0);
    CHECK(p < 0.2);  // exact value is 0.0425
    CHECK(num(m, "good_fraction") == 1.0);
}

TEST_CASE("check subcommand reports verdicts and witnesses") {
    SECTION("interval property fails on the risk-factor model") {
        auto r = run_cli("check czech-autoworkers intervals --format machine");
        CHECK(r.exitCode == 1);
        auto m = kv_of(r.out);
        CHECK(m.at("outcome") == "FAIL");
        CHECK(m.at("basis_size") == "20");
        CHECK(m.at("witness_element") == "19");
        CHECK(m.at("witness_cell") == "0.0.0.0.0.0");
        CHECK(m.at("witness_exponent") == "2");
    }
    SECTION("its square-free subbasis certifies") {
        auto r = run_cli("check czech-autoworkers subbasis --format machine");
        CHECK(r.exitCode == 0);
        auto m = kv_of(r.out);
        CHECK(m.at("moves") == "19");
        CHECK(m.at("dropped_elements") == "1");
        CHECK(m.at("self_basis") == "PASS");
        CHECK(m.at("square_free") == "PASS");
        CHECK(m.at("saturation_closed") == "PASS");
        CHECK(m.at("certified") == "true");
    }
    SECTION("the subbasis moves connect at the observed margin") {
        auto r = run_cli("check czech-autoworkers markov --format machine");
        CHECK(r.exitCode == 0);
        auto m = kv_of(r.out);
        CHECK(m.at("support_size") == "51");
        CHECK(m.at("markov_subbasis") == "true");
    }
    SECTION("relaxation exactness per direction") {
        auto good = run_cli("check breslow-day-35-44 lpexact --format machine");
        CHECK(good.exitCode == 0);
        auto g = kv_of(good.out);
        CHECK(g.at("lower") == "PASS");
        CHECK(g.at("upper") == "PASS");
        auto bad = run_cli("check czech-autoworkers lpexact --format machine");
        CHECK(bad.exitCode == 1);
        auto b = kv_of(bad.out);
        CHECK(b.at("lower") == "FAIL");
        CHECK(b.at("lower_witness") == "6");
        CHECK(b.at("upper") == "FAIL");
        CHECK(b.at("upper_fail_cell") == "0.0.0.0.0.0");
    }
    SECTION("brute force agrees on an enumerable fiber") {
        auto r = run_cli("check breslow-day-35-44 bruteforce --format machine");
        CHECK(r.exitCode == 0);
        auto m = kv_of(r.out);
        CHECK(m.at("fiber_size") == "25");
        CHECK(m.at("holds") == "true");
    }
    SECTION("budget exhaustion is inconclusive, exit code 2") {
        auto r = run_cli("check dsmall-3x3x3 bruteforce --budget 50 --format machine");
        CHECK(r.exitCode == 2);
        auto gb = run_cli("check breslow-day-35-44 intervals --budget 1 --format machine");
        CHECK(gb.exitCode == 2);
        CHECK(kv_of(gb.out).at("outcome") == "INCONCLUSIVE");
    }
}

TEST_CASE("bounds prints an interval per remaining cell") {
    auto r = run_cli("bounds routing-synthetic --format machine");
    REQUIRE(r.exitCode == 0);
    CHECK(count_key(r.out, "interval") == 9);
    CHECK(r.out.find("interval=r12 0 5\n") != std::string::npos);
    CHECK(r.out.find("interval=r13 0 4\n") != std::string::npos);
    CHECK(r.out.find("interval=r23 0 6\n") != std::string::npos);

    auto fixed = run_cli("bounds routing-synthetic --prefix 3,1 --format machine");
    CHECK(fixed.out.find("interval=s12 1 1\n") != std::string::npos);

    auto full = run_cli(
        "bounds routing-synthetic --prefix 3,1,2,0,4,2,1,2,0 --format machine");
    CHECK(full.exitCode == 0);
    CHECK(count_key(full.out, "interval") == 0);

    auto ip = run_cli("bounds routing-synthetic --engine ip --format machine");
    CHECK(ip.out.substr(ip.out.find("interval=")) ==
          r.out.substr(r.out.find("interval=")));
}

TEST_CASE("order files override the dataset cell order") {
    const std::string path = "cli_order_test.txt";
    {
        std::ofstream f(path);
        for (int j = 31; j >= 0; --j) f << j << " ";
    }
    auto r = run_cli("enumerate breslow-day-35-44 --size-only --order " + path +
                     " --format machine");
    std::remove(path.c_str());
    REQUIRE(r.exitCode == 0);
    auto m = kv_of(r.out);
    CHECK(m.at("fiber_size") == "25");  // the fiber does not depend on the order
    CHECK(m.at("cell_order").rfind("1.3.3 1.3.2", 0) == 0);

    auto bad = run_cli("enumerate breslow-day-35-44 --order no_such_file");
    CHECK(bad.exitCode == 1);
}

TEST_CASE("usage and data errors exit with code 1") {
    CHECK(run_cli("").exitCode == 1);
    CHECK(run_cli("frobnicate").exitCode == 1);
    CHECK(run_cli("count").exitCode == 1);
    CHECK(run_cli("count no-such-dataset.json").exitCode == 1);
    CHECK(run_cli("check breslow-day-35-44 nonsense").exitCode == 1);
    CHECK(run_cli("count breslow-day-35-44 --format yaml").exitCode == 1);
    CHECK(run_cli("bounds routing-synthetic --prefix 1,x").exitCode == 1);
    CHECK(run_cli("bounds routing-synthetic --engine qp").exitCode == 1);
    // hardy-weinberg needs an allele-count system
    CHECK(run_cli("pvalue breslow-day-35-44 --samples 10 --target hw").exitCode == 1);
    CHECK(run_cli("--help").exitCode == 0);
}

TEST_CASE("text reports carry the same numbers as machine reports") {
    auto text = run_cli("count breslow-day-35-44 --samples 100 --seed 4");
    auto mach = run_cli("count breslow-day-35-44 --samples 100 --seed 4 --format machine");
    REQUIRE(text.exitCode == 0);
    CHECK(text.out.rfind("table count estimate", 0) == 0);
    auto m = kv_of(mach.out);
    // the text form prints shorter decimals of the same estimate
    const double est = num(m, "estimate");
    char rounded[32];
    std::snprintf(rounded, sizeof rounded, "%.6g", est);
    CHECK(text.out.find(rounded) != std::string::npos);
}
