#include "backflow/io.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "backflow/cache.hpp"
#include "backflow/errors.hpp"

#include <json.hpp>

namespace backflow {

namespace fs = std::filesystem;

std::string code_version() {
    std::ostringstream os;
    os << "backflow " << kCodeVersion << " (mpfr " << mpfr_get_version() << ", gmp " << gmp_version
       << ")";
    return os.str();
}

namespace {

// Decimal digits that round-trip the ball's binary precision.
long digits_for(const Real& v) {
    return static_cast<long>(std::ceil(static_cast<double>(v.prec()) * 0.30103)) + 2;
}

}  // namespace

std::string sweep_csv(const SpectrumSweep& sweep) {
    std::ostringstream os;
    os << "N,lambda_back,lambda_over,cert_back,cert_over\n";
    for (const auto& r : sweep.records) {
        os << r.N << ',' << r.lambda_back.mid_string(digits_for(r.lambda_back)) << ','
           << r.lambda_over.mid_string(digits_for(r.lambda_over)) << ','
           << r.cert_back.mid_string(digits_for(r.cert_back)) << ','
           << r.cert_over.mid_string(digits_for(r.cert_over)) << '\n';
    }
    return os.str();
}

void write_sweep_csv(const SpectrumSweep& sweep, const std::string& path) {
    write_text_file(path, sweep_csv(sweep));
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cache_error("cannot open sweep table: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("N,lambda_back", 0) != 0)
        throw cache_error("not a sweep table (bad header): " + path);
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        SweepRow row;
        std::string field;
        if (!std::getline(ls, field, ',')) throw cache_error("bad sweep row: " + line);
        try {
            row.N = std::stoi(field);
        } catch (const std::exception&) {
            throw cache_error("bad sweep row index: " + line);
        }
        if (!std::getline(ls, row.lambda_back, ',') || !std::getline(ls, row.lambda_over, ',') ||
            !std::getline(ls, row.cert_back, ',') || !std::getline(ls, row.cert_over, ','))
            throw cache_error("bad sweep row: " + line);
        rows.push_back(std::move(row));
    }
    return rows;
}

RealSequence sequence_from_rows(const std::vector<SweepRow>& rows, bool backflow_column,
                                mpfr_prec_t prec) {
    if (rows.empty()) throw domain_error("sweep table has no rows");
    RealSequence seq;
    seq.start_index = rows.front().N;
    int expect = rows.front().N;
    for (const auto& r : rows) {
        if (r.N != expect)
            throw domain_error("sweep table rows are not contiguous at N=" + std::to_string(r.N));
        ++expect;
        const std::string& s = backflow_column ? r.lambda_back : r.lambda_over;
        seq.values.push_back(Real::of_str(s.c_str(), prec));
    }
    return seq;
}

std::vector<CacheDigest> cache_digests(const std::string& dir) {
    std::vector<CacheDigest> out;
    if (dir.empty() || !fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".bfc") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        std::string bytes = read_text_file(p.string());
        char buf[16];
        std::snprintf(buf, sizeof buf, "%08x", crc32_bytes(bytes.data(), bytes.size()));
        out.push_back({p.filename().string(), buf});
    }
    return out;
}

std::string manifest_json(const std::string& command,
                          const std::map<std::string, std::string>& inputs, double wall_seconds,
                          const std::vector<CacheDigest>& caches) {
    nlohmann::json j;
    j["command"] = command;
    j["inputs"] = nlohmann::json::object();
    for (const auto& [k, v] : inputs) j["inputs"][k] = v;
    j["version"] = code_version();
    j["wall_seconds"] = wall_seconds;
    j["caches"] = nlohmann::json::array();
    for (const auto& c : caches) j["caches"].push_back({{"file", c.file}, {"digest", c.digest}});
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw cache_error("cannot write file: " + path);
    out << content;
    if (!out) throw cache_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cache_error("cannot read file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunConfig RunConfig::load(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip trailing CR and surrounding whitespace
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;
        std::size_t eq = line.find('=', start);
        if (eq == std::string::npos || eq == start)
            throw domain_error("config line " + std::to_string(lineno) +
                               " is not KEY=VALUE: " + line);
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string val = line.substr(eq + 1);
        std::size_t vs = val.find_first_not_of(" \t");
        val = vs == std::string::npos ? std::string() : val.substr(vs);
        cfg.values[key] = val;
    }
    return cfg;
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

std::string RunConfig::cache_dir() const {
    if (const char* env = std::getenv("BACKFLOW_CACHE_DIR"); env && *env) return env;
    return get("cache_dir", "");
}

std::string RunConfig::out_dir() const {
    if (const char* env = std::getenv("BACKFLOW_OUT_DIR"); env && *env) return env;
    return get("out_dir", ".");
}

}  // namespace backflow
