// End-to-end tests of the command-line tool: every subcommand is exercised
// through std::system with stdout/stderr captured, manifests and tables are
// parsed back, determinism across reruns is checked byte for byte, and error
// paths must exit nonzero with a machine-readable record on stderr.
#include "test_main.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "backflow/cache.hpp"
#include "backflow/io.hpp"

using namespace backflow;
namespace fs = std::filesystem;
using nlohmann::json;

#ifndef BACKFLOW_CLI_PATH
#error "BACKFLOW_CLI_PATH must point at the built binary"
#endif

namespace {

std::string fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("bfcli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Runs the binary through the shell with ambient configuration stripped, so
// only flags (and env_prefix, when given) steer it.
RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static const std::string scratch = fresh_dir("io");
    static int counter = 0;
    std::string out = scratch + "/out" + std::to_string(counter);
    std::string err = scratch + "/err" + std::to_string(counter);
    ++counter;
    std::string cmd = "env -u BACKFLOW_CACHE_DIR -u BACKFLOW_OUT_DIR " + env_prefix + " " +
                      std::string(BACKFLOW_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("gram subcommand prints a certified overlap and writes a manifest") {
    std::string out = fresh_dir("gram_out");
    RunResult r = run_cli("--out-dir " + out + " gram --m 0 --n 1 --digits 35");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "m,n,value,radius"));
    CHECK(contains(r.out, "0,1,5.77350269189625"));  // 1/sqrt(3)
    CHECK(contains(r.out, "2^-"));

    // Diagonal entries are exactly one.
    RunResult d = run_cli("--out-dir " + out + " gram --m 2 --n 2");
    REQUIRE(d.exit_code == 0);
    CHECK(contains(d.out, "exact"));
    CHECK(contains(d.out, "1.0000000000"));

    // JSON output mode parses and carries the same value.
    RunResult j = run_cli("--out-dir " + out + " --format json gram --m 0 --n 1 --digits 35");
    REQUIRE(j.exit_code == 0);
    json doc = json::parse(j.out);
    CHECK(doc["m"] == 0);
    CHECK(doc["n"] == 1);
    CHECK(doc["value"].get<std::string>().rfind("5.77350269189625764", 0) == 0);

    // Manifest: command, inputs, version string, wall time, cache digests.
    json man = json::parse(slurp(out + "/gram_manifest.json"));
    CHECK(man["command"] == "gram");
    CHECK(man["inputs"]["digits"] == "35");
    CHECK(man["inputs"]["format"] == "json");
    CHECK(contains(man["version"].get<std::string>(), "backflow"));
    CHECK(man["wall_seconds"].get<double>() >= 0.0);
    CHECK(man["caches"].is_array());
}

TEST_CASE("matrix subcommand emits elements singly and as a cached block") {
    std::string out = fresh_dir("matrix_out");
    std::string cache = fresh_dir("matrix_cache");

    RunResult one = run_cli("--out-dir " + out + " matrix --m 0 --n 0 --digits 30");
    REQUIRE(one.exit_code == 0);
    CHECK(contains(one.out, "m,n,re,im,radius"));
    CHECK(contains(one.out, "0,0,-"));  // diagonal kernel element is negative

    RunResult blk = run_cli("--out-dir " + out + " --cache-dir " + cache +
                            " matrix --dim 3 --digits 30");
    REQUIRE(blk.exit_code == 0);
    std::string table = slurp(out + "/matrix.csv");
    CHECK(table.rfind("m,n,re,im,radius\n", 0) == 0);
    int lines = 0;
    for (char c : table)
        if (c == '\n') ++lines;
    CHECK(lines == 10);  // header + 3x3 entries

    // The block run populated the element cache with the upper triangle.
    auto reports = cache_scan(cache);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].ok);
    CHECK(reports[0].records == 6);
}

TEST_CASE("sweep writes a table, reruns byte-identically, and resumes from cache") {
    std::string outA = fresh_dir("sweep_a");
    std::string outB = fresh_dir("sweep_b");
    std::string cache = fresh_dir("sweep_cache");
    std::string common = " sweep --M 1 --Nmax 4 --out sweep.csv";

    RunResult a = run_cli("--out-dir " + outA + " --cache-dir " + cache + common);
    REQUIRE(a.exit_code == 0);
    CHECK(contains(a.out, "lambda_back(4)"));
    CHECK(contains(a.out, "certified yes"));

    auto rows = read_sweep_csv(outA + "/sweep.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].N == 1);
    CHECK(rows[3].N == 4);
    RealSequence back = sequence_from_rows(rows, true, 128);
    CHECK(std::fabs(back.at(4).mid_d() - 0.021632304946) <= 1e-9);
    RealSequence over = sequence_from_rows(rows, false, 128);
    CHECK(std::fabs(over.at(4).mid_d() - (-0.969502822686)) <= 1e-9);

    RunResult b = run_cli("--out-dir " + outB + " --cache-dir " + cache + common);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(outA + "/sweep.csv") == slurp(outB + "/sweep.csv"));

    json man = json::parse(slurp(outB + "/sweep_manifest.json"));
    CHECK(man["command"] == "sweep");
    CHECK(man["inputs"]["Nmax"] == "4");
    REQUIRE(man["caches"].size() == 1);  // digest of the shared element cache

    // Same pipeline through the report subcommand.
    RunResult rep = run_cli("--out-dir " + outB + " report --input " + outA +
                            "/sweep.csv --M 1");
    REQUIRE(rep.exit_code == 0);
    CHECK(contains(rep.out, "rows = 4"));
    CHECK(contains(rep.out, "window = [-1.000000, 0.072000]"));
}

TEST_CASE("accelerate applies ladders, smoothing, and difference transforms") {
    std::string out = fresh_dir("accel_out");
    std::string cache = fresh_dir("accel_cache");
    RunResult sw = run_cli("--out-dir " + out + " --cache-dir " + cache +
                           " sweep --M 1 --Nmax 4 --out table.csv");
    REQUIRE(sw.exit_code == 0);
    std::string input = out + "/table.csv";

    RunResult lad = run_cli("--out-dir " + out + " accelerate --input " + input +
                            " --ladder 0,0.5 --digits 60 --pair");
    REQUIRE(lad.exit_code == 0);
    CHECK(contains(lad.out, "ladder estimate = "));
    CHECK(contains(lad.out, "bound pair = ["));
    CHECK(contains(lad.out, "tail = "));
    std::string table = slurp(out + "/accelerated.csv");
    CHECK(table.rfind("n,value\n", 0) == 0);

    RunResult kz = run_cli("--out-dir " + out + " accelerate --input " + input + " --kz 3,1");
    REQUIRE(kz.exit_code == 0);
    CHECK(contains(kz.out, "kz 3,1 -> indices 2..3"));

    RunResult rd = run_cli("--out-dir " + out + " accelerate --input " + input + " --rd");
    REQUIRE(rd.exit_code == 0);
    CHECK(contains(rd.out, "rd -> indices 2..2"));
}

TEST_CASE("eigvec subcommand writes a momentum profile table") {
    std::string out = fresh_dir("eigvec_out");
    RunResult r = run_cli("--out-dir " + out +
                          " eigvec --N 2 --M 1 --which back --pmin 0.5 --pmax 2.0 --points 5 "
                          "--scale p34");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "lambda_back(2) = "));
    std::string table = slurp(out + "/eigvec_profile.csv");
    CHECK(table.rfind("p,re,im,abs2\n", 0) == 0);
    int lines = 0;
    for (char c : table)
        if (c == '\n') ++lines;
    CHECK(lines == 6);  // header + 5 points

    RunResult bad = run_cli("--out-dir " + out + " eigvec --N 2 --which middle");
    CHECK(bad.exit_code == 1);
    CHECK(json::parse(bad.err)["error"]["type"] == "domain_error");
}

TEST_CASE("trial subcommand reflects the inequality in its exit code") {
    std::string out = fresh_dir("trial_out");
    RunResult r = run_cli("--out-dir " + out + " trial --M 2 --epsilon 0.05");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "satisfied = yes"));
    CHECK(contains(r.out, "value = 4.147"));  // 4.147...e-03
}

TEST_CASE("classical point mass gives the exact wedge answer") {
    std::string out = fresh_dir("classical_out");
    RunResult r = run_cli("--out-dir " + out +
                          " classical --M 2 --ensemble point --x 1.0 --p 1.0 --samples 1000 "
                          "--seed 7");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "estimate = -1.00000000"));
    CHECK(contains(r.out, "hits = 1000/1000"));

    RunResult g = run_cli("--out-dir " + out + " --format json classical --M 1 --ensemble "
                          "gauss --x0 0 --sx 2 --pmean 1 --samples 20000 --seed 3");
    REQUIRE(g.exit_code == 0);
    json doc = json::parse(g.out);
    CHECK(doc["estimate"].get<double>() <= 0.0);
    CHECK(doc["estimate"].get<double>() >= -1.0);
    CHECK(doc["hits"].get<long>() >= 0);
}

TEST_CASE("certify issues a certificate at modest dimension") {
    std::string out = fresh_dir("certify_out");
    RunResult r = run_cli("--out-dir " + out + " certify --N 3 --M 1");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "issued yes"));
    CHECK(contains(r.out, "lambda_min = "));
    CHECK(contains(r.out, "+-"));
}

TEST_CASE("cache administration: verify, export, import, gc") {
    std::string out = fresh_dir("cacheadm_out");
    std::string cache = fresh_dir("cacheadm_cache");
    RunResult fill = run_cli("--out-dir " + out + " --cache-dir " + cache +
                             " matrix --dim 3 --digits 30");
    REQUIRE(fill.exit_code == 0);

    RunResult ver = run_cli("--out-dir " + out + " --cache-dir " + cache +
                            " cache verify --sample-percent 50 --sample-digits 20");
    REQUIRE(ver.exit_code == 0);
    CHECK(contains(ver.out, "failures = 0"));
    CHECK(contains(ver.out, " ok"));

    std::string bundle = out + "/bundle.bin";
    RunResult exp = run_cli("--out-dir " + out + " --cache-dir " + cache +
                            " cache export --bundle " + bundle);
    REQUIRE(exp.exit_code == 0);
    CHECK(fs::exists(bundle));

    std::string cache2 = fresh_dir("cacheadm_cache2");
    RunResult imp = run_cli("--out-dir " + out + " --cache-dir " + cache2 +
                            " cache import --bundle " + bundle);
    REQUIRE(imp.exit_code == 0);
    CHECK(contains(imp.out, "imported = 1 file(s)"));
    auto reports = cache_scan(cache2);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].records == 6);

    // gc with the same model keys removes the file; the dir scans empty.
    RunResult gc = run_cli("--out-dir " + out + " --cache-dir " + cache + " cache gc --M 1");
    REQUIRE(gc.exit_code == 0);
    CHECK(contains(gc.out, "removed = 1"));
    CHECK(cache_scan(cache).empty());
}

TEST_CASE("configuration precedence: flag beats environment beats file") {
    std::string d1 = fresh_dir("cfg_file");
    std::string d2 = fresh_dir("cfg_env");
    std::string d3 = fresh_dir("cfg_flag");
    std::string cfgdir = fresh_dir("cfg");
    std::string cfg = cfgdir + "/run.cfg";
    {
        std::ofstream f(cfg);
        f << "# comment line\n";
        f << "out_dir = " << d1 << "\n";
    }

    RunResult r1 = run_cli("--config " + cfg + " gram --m 0 --n 0");
    REQUIRE(r1.exit_code == 0);
    CHECK(fs::exists(d1 + "/gram_manifest.json"));

    RunResult r2 = run_cli("--config " + cfg + " gram --m 0 --n 0",
                           "BACKFLOW_OUT_DIR=" + d2);
    REQUIRE(r2.exit_code == 0);
    CHECK(fs::exists(d2 + "/gram_manifest.json"));

    RunResult r3 = run_cli("--config " + cfg + " --out-dir " + d3 + " gram --m 0 --n 0",
                           "BACKFLOW_OUT_DIR=" + d2);
    REQUIRE(r3.exit_code == 0);
    CHECK(fs::exists(d3 + "/gram_manifest.json"));
    CHECK(!fs::exists(d3 + "/sweep_manifest.json"));
}

TEST_CASE("failures exit nonzero with a machine-readable error record") {
    std::string out = fresh_dir("errors_out");

    RunResult fmt = run_cli("--out-dir " + out + " --format xml gram --m 0 --n 1");
    CHECK(fmt.exit_code == 1);
    json e1 = json::parse(fmt.err);
    CHECK(e1["error"]["type"] == "domain_error");
    CHECK(contains(e1["error"]["message"].get<std::string>(), "format"));

    RunResult missing = run_cli("--out-dir " + out +
                                " accelerate --input /nonexistent/t.csv --ladder 0,0.5");
    CHECK(missing.exit_code == 1);
    CHECK(json::parse(missing.err)["error"]["type"] == "cache_error");

    RunResult odd = run_cli("--out-dir " + out + " trial --M 3 --epsilon 0.1");
    CHECK(odd.exit_code == 1);
    CHECK(json::parse(odd.err)["error"]["type"] == "domain_error");

    RunResult workers = run_cli("--out-dir " + out + " --workers 0 gram --m 0 --n 1");
    CHECK(workers.exit_code == 1);
    CHECK(json::parse(workers.err)["error"]["type"] == "domain_error");

    RunResult unknown = run_cli("bogus-subcommand");
    CHECK(unknown.exit_code != 0);

    RunResult nocache = run_cli("--out-dir " + out + " cache verify");
    CHECK(nocache.exit_code == 1);
    CHECK(json::parse(nocache.err)["error"]["type"] == "domain_error");
}

TEST_CASE("worker pool size is accepted as a scheduling hint") {
    std::string out = fresh_dir("workers_out");
    RunResult r = run_cli("--out-dir " + out + " --workers 3 gram --m 0 --n 1");
    REQUIRE(r.exit_code == 0);
    json man = json::parse(slurp(out + "/gram_manifest.json"));
    CHECK(man["inputs"]["workers"] == "3");
}
