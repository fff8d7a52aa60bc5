// backflow: command-line surface for the M-fold backflow/overflow laboratory.
//
// Subcommands: gram, matrix, sweep, accelerate, eigvec, trial, classical,
// certify, report, cache (verify | gc | export | import).  Every run writes a
// JSON manifest (inputs, versions, wall time, cache digests) into the output
// directory.  Failures exit nonzero after printing a machine-readable error
// record to stderr.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "backflow/accel.hpp"
#include "backflow/analysis.hpp"
#include "backflow/basis.hpp"
#include "backflow/cache.hpp"
#include "backflow/eigen.hpp"
#include "backflow/elements.hpp"
#include "backflow/errors.hpp"
#include "backflow/grid.hpp"
#include "backflow/io.hpp"
#include "backflow/pair.hpp"
#include "backflow/prec.hpp"

namespace bf = backflow;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string cache_dir_flag;
    std::string out_dir_flag;
    std::string format = "csv";
    int workers = 1;

    bf::RunConfig config;

    void resolve() {
        config = bf::RunConfig::load(config_path);
        if (workers < 1) throw bf::domain_error("worker pool size must be >= 1");
        if (format != "csv" && format != "json")
            throw bf::domain_error("output format must be csv or json");
    }
    // Precedence: explicit flag > environment > config file > default.
    std::string cache_dir() const {
        return cache_dir_flag.empty() ? config.cache_dir() : cache_dir_flag;
    }
    std::string out_dir() const { return out_dir_flag.empty() ? config.out_dir() : out_dir_flag; }
};

// Grid/basis flags shared by the matrix-producing subcommands.
struct ModelOpts {
    int M = 1;
    double T = 1.0;
    double a = 0.0;      // 0 -> fold default 2M/pi
    double delta = -0.25;

    bf::TimeGrid grid() const { return bf::equal_spacing_grid(M, T); }
    bf::BasisSpec spec() const {
        bf::BasisSpec s = bf::BasisSpec::for_fold(M);
        if (a > 0.0) s.a = a;
        s.delta = delta;
        s.validate();
        return s;
    }
    void add_flags(CLI::App* cmd, bool with_grid = true) {
        cmd->add_option("--M", M, "number of backflow periods (fold count)")
            ->check(CLI::PositiveNumber);
        if (with_grid)
            cmd->add_option("--T", T, "half-period spacing of the time grid")
                ->check(CLI::PositiveNumber);
        cmd->add_option("--a", a, "basis exponential rate (default 2M/pi)");
        cmd->add_option("--delta", delta, "basis power offset, |delta| < 1/2");
    }
};

std::string format_real(const bf::Real& v) {
    long dg = static_cast<long>(std::ceil(static_cast<double>(v.prec()) * 0.30103)) + 2;
    return v.mid_string(dg);
}

std::string rad_string(const bf::Real& v) {
    long e = v.rad_log2_ceil();
    if (e == LONG_MIN) return "exact";
    char buf[32];
    std::snprintf(buf, sizeof buf, "2^%ld", e);
    return buf;
}

void write_manifest(const GlobalOpts& g, const std::string& command,
                    std::map<std::string, std::string> inputs,
                    std::chrono::steady_clock::time_point t0) {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    inputs["workers"] = std::to_string(g.workers);
    inputs["format"] = g.format;
    if (!g.cache_dir().empty()) inputs["cache_dir"] = g.cache_dir();
    auto digests = bf::cache_digests(g.cache_dir());
    std::string doc = bf::manifest_json(command, inputs, wall, digests);
    bf::write_text_file((std::filesystem::path(g.out_dir()) / (command + "_manifest.json")).string(),
                        doc);
}

void emit(const GlobalOpts& g, const json& doc, const std::string& text) {
    if (g.format == "json")
        std::cout << doc.dump(2) << "\n";
    else
        std::cout << text;
}

// Progress meter on stderr (stdout stays machine-readable).
void progress_meter(const char* label, int done, int total) {
    if (total <= 0) return;
    int step = total / 20 + 1;
    if (done % step == 0 || done == total)
        std::fprintf(stderr, "\r%s %d/%d", label, done, total);
    if (done == total) std::fprintf(stderr, "\n");
}

// ---------------------------------------------------------------------------

int cmd_gram(const GlobalOpts& g, long m, long n, double delta, long digits) {
    auto t0 = std::chrono::steady_clock::now();
    bf::Real v = bf::gram_element(m, n, delta, digits);
    json doc = {{"m", m},
                {"n", n},
                {"delta", delta},
                {"digits", digits},
                {"value", format_real(v)},
                {"radius", rad_string(v)}};
    std::ostringstream os;
    os << "m,n,value,radius\n" << m << ',' << n << ',' << format_real(v) << ',' << rad_string(v)
       << "\n";
    emit(g, doc, os.str());
    write_manifest(g, "gram",
                   {{"m", std::to_string(m)},
                    {"n", std::to_string(n)},
                    {"delta", std::to_string(delta)},
                    {"digits", std::to_string(digits)}},
                   t0);
    return 0;
}

int cmd_matrix(const GlobalOpts& g, const ModelOpts& mo, long m, long n, int dim, long digits) {
    auto t0 = std::chrono::steady_clock::now();
    bf::TimeGrid grid = mo.grid();
    bf::BasisSpec spec = mo.spec();
    std::ostringstream os;
    json doc;
    if (dim > 0) {
        bf::MatrixPair pair =
            bf::build_pair(dim, grid, spec, digits, g.cache_dir(),
                           [](int d, int t) { progress_meter("elements", d, t); });
        os << "m,n,re,im,radius\n";
        doc["dim"] = dim;
        doc["entries"] = json::array();
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                const bf::Complex& e = pair.A(i, j);
                os << i << ',' << j << ',' << format_real(e.re) << ',' << format_real(e.im) << ','
                   << rad_string(e.re) << "\n";
                doc["entries"].push_back({{"m", i},
                                          {"n", j},
                                          {"re", format_real(e.re)},
                                          {"im", format_real(e.im)},
                                          {"radius", rad_string(e.re)}});
            }
        bf::write_text_file((std::filesystem::path(g.out_dir()) / "matrix.csv").string(),
                            os.str());
    } else {
        bf::Complex e = bf::mfold_element(m, n, grid, spec, digits);
        os << "m,n,re,im,radius\n"
           << m << ',' << n << ',' << format_real(e.re) << ',' << format_real(e.im) << ','
           << rad_string(e.re) << "\n";
        doc = {{"m", m},
               {"n", n},
               {"re", format_real(e.re)},
               {"im", format_real(e.im)},
               {"radius", rad_string(e.re)}};
    }
    emit(g, doc, os.str());
    write_manifest(g, "matrix",
                   {{"M", std::to_string(mo.M)},
                    {"grid", grid.to_kv()},
                    {"spec", spec.to_kv()},
                    {"digits", std::to_string(digits)},
                    {"dim", std::to_string(dim)},
                    {"m", std::to_string(m)},
                    {"n", std::to_string(n)}},
                   t0);
    return 0;
}

int cmd_sweep(const GlobalOpts& g, const ModelOpts& mo, int Nmax, long element_digits,
              long solver_digits, const std::string& out_name) {
    auto t0 = std::chrono::steady_clock::now();
    bf::TimeGrid grid = mo.grid();
    bf::BasisSpec spec = mo.spec();
    bf::PrecisionPolicy pol = bf::PrecisionPolicy::for_dimension(Nmax);
    if (element_digits > 0) pol.element_digits = element_digits;
    if (solver_digits > 0) pol.solver_digits = solver_digits;
    pol.validate();

    bf::SpectrumSweep sw = bf::spectrum_sweep(
        mo.M, Nmax, spec, pol, grid, g.cache_dir(),
        [](int d, int t) { progress_meter("elements", d, t); },
        [](int d, int t) { progress_meter("solve", d, t); });

    std::string name = out_name.empty() ? "sweep_M" + std::to_string(mo.M) + "_N" +
                                              std::to_string(Nmax) + ".csv"
                                        : out_name;
    std::string path = (std::filesystem::path(g.out_dir()) / name).string();
    bf::write_sweep_csv(sw, path);

    const auto& last = sw.records.back();
    json doc = {{"table", path},
                {"Nmax", Nmax},
                {"lambda_back", format_real(last.lambda_back)},
                {"lambda_over", format_real(last.lambda_over)},
                {"certified", last.certified},
                {"cert_back", format_real(last.cert_back)},
                {"cert_over", format_real(last.cert_over)},
                {"min_gram_eigenvalue", format_real(sw.min_gram)}};
    std::ostringstream os;
    os << "table " << path << "\n"
       << "lambda_back(" << Nmax << ") = " << format_real(last.lambda_back) << "\n"
       << "lambda_over(" << Nmax << ") = " << format_real(last.lambda_over) << "\n"
       << "certified " << (last.certified ? "yes" : "no") << " cert_back "
       << format_real(last.cert_back) << " cert_over " << format_real(last.cert_over) << "\n";
    emit(g, doc, os.str());
    write_manifest(g, "sweep",
                   {{"M", std::to_string(mo.M)},
                    {"Nmax", std::to_string(Nmax)},
                    {"grid", grid.to_kv()},
                    {"spec", spec.to_kv()},
                    {"element_digits", std::to_string(pol.element_digits)},
                    {"solver_digits", std::to_string(pol.solver_digits)},
                    {"table", name}},
                   t0);
    return 0;
}

int cmd_accelerate(const GlobalOpts& g, const std::string& input, const std::string& column,
                   const std::string& ladder_csv, const std::string& kz_csv, bool rd, long digits,
                   bool pair_bounds) {
    auto t0 = std::chrono::steady_clock::now();
    auto rows = bf::read_sweep_csv(input);
    mpfr_prec_t prec = bf::bits_for_digits(digits);
    bf::RealSequence seq = bf::sequence_from_rows(rows, column == "back", prec);

    json doc;
    doc["input"] = input;
    doc["column"] = column;
    std::ostringstream os;

    if (!kz_csv.empty()) {
        int m = 0, k = 0;
        if (std::sscanf(kz_csv.c_str(), "%d,%d", &m, &k) != 2)
            throw bf::domain_error("--kz expects m,k (example: 7,5)");
        seq = bf::kz_filter(seq, m, k);
        doc["kz"] = {{"m", m}, {"k", k}};
        os << "kz " << m << "," << k << " -> indices " << seq.start_index << ".."
           << seq.last_index() << "\n";
    }
    if (rd) {
        auto r = bf::raabe_duhamel(seq);
        seq = r.accelerated;
        doc["rd"] = true;
        os << "rd -> indices " << seq.start_index << ".." << seq.last_index() << "\n";
    }
    std::vector<double> gammas;
    if (!ladder_csv.empty()) {
        std::istringstream ls(ladder_csv);
        std::string f;
        while (std::getline(ls, f, ',')) gammas.push_back(std::stod(f));
        bf::PowerLadder lad = bf::PowerLadder::of(gammas);
        bf::RealSequence acc = bf::generalized_richardson(seq, lad);
        if (acc.values.empty())
            throw bf::domain_error("sequence too short for the requested ladder");
        doc["ladder"] = gammas;
        doc["estimate"] = format_real(acc.values.back());
        os << "ladder estimate = " << format_real(acc.values.back()) << "\n";
        if (pair_bounds) {
            // Companion ladder with one further exponent: the two tails bracket
            // the limit in the regimes where the expansion alternates.
            std::vector<double> g2 = gammas;
            g2.push_back(g2.back() + (g2.size() > 1 ? g2.back() - g2[g2.size() - 2] : 0.5));
            bf::RealSequence acc2 = bf::generalized_richardson(seq, bf::PowerLadder::of(g2));
            if (acc2.values.empty())
                throw bf::domain_error("sequence too short for the extended ladder");
            double lo = acc.values.back().mid_d(), hi = acc2.values.back().mid_d();
            const bf::Real& rlo = lo <= hi ? acc.values.back() : acc2.values.back();
            const bf::Real& rhi = lo <= hi ? acc2.values.back() : acc.values.back();
            doc["bound_pair"] = {format_real(rlo), format_real(rhi)};
            os << "bound pair = [" << format_real(rlo) << ", " << format_real(rhi) << "]\n";
        }
        seq = std::move(acc);
    }
    // Transformed sequence table.
    std::ostringstream table;
    table << "n,value\n";
    for (std::size_t i = 0; i < seq.values.size(); ++i)
        table << seq.start_index + static_cast<int>(i) << ',' << format_real(seq.values[i])
              << "\n";
    std::string path = (std::filesystem::path(g.out_dir()) / "accelerated.csv").string();
    bf::write_text_file(path, table.str());
    doc["table"] = path;
    os << "table " << path << "\n";
    if (!seq.values.empty()) {
        doc["tail"] = format_real(seq.values.back());
        os << "tail = " << format_real(seq.values.back()) << "\n";
    }
    emit(g, doc, os.str());
    write_manifest(g, "accelerate",
                   {{"input", input},
                    {"column", column},
                    {"ladder", ladder_csv},
                    {"kz", kz_csv},
                    {"rd", rd ? "true" : "false"},
                    {"digits", std::to_string(digits)}},
                   t0);
    return 0;
}

int cmd_eigvec(const GlobalOpts& g, const ModelOpts& mo, int N, const std::string& which,
               double pmin, double pmax, int points, bool log_grid, const std::string& scale,
               long element_digits, long solver_digits) {
    auto t0 = std::chrono::steady_clock::now();
    bf::TimeGrid grid = mo.grid();
    bf::BasisSpec spec = mo.spec();
    bf::PrecisionPolicy pol = bf::PrecisionPolicy::for_dimension(N);
    if (element_digits > 0) pol.element_digits = element_digits;
    if (solver_digits > 0) pol.solver_digits = solver_digits;
    pol.validate();
    if (!(pmin > 0) || !(pmax > pmin)) throw bf::domain_error("need 0 < pmin < pmax");
    if (points < 2) throw bf::domain_error("need at least two grid points");
    if (which != "back" && which != "over")
        throw bf::domain_error("--which must be back or over");
    if (scale != "none" && scale != "p34")
        throw bf::domain_error("--scale must be none or p34");

    bf::MatrixPair pair =
        bf::build_pair(N, grid, spec, pol.element_digits, g.cache_dir(),
                       [](int d, int t) { progress_meter("elements", d, t); });
    bf::SpectrumResult res = bf::gevp_solve(pair, pol, bf::SolveMode::extremes, true);
    const auto& vec = which == "back" ? res.vectors.back() : res.vectors.front();
    const bf::Real& lambda =
        which == "back" ? res.eigenvalues.back() : res.eigenvalues.front();

    std::vector<double> pg(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        double f = static_cast<double>(i) / (points - 1);
        pg[static_cast<std::size_t>(i)] =
            log_grid ? pmin * std::pow(pmax / pmin, f) : pmin + f * (pmax - pmin);
    }
    auto prof = bf::eigvec_profile(vec, spec, pg,
                                   scale == "p34" ? bf::ProfileScale::p34
                                                  : bf::ProfileScale::none);
    std::ostringstream table;
    table << "p,re,im,abs2\n";
    char buf[128];
    for (std::size_t i = 0; i < pg.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17e,%.17e,%.17e,%.17e\n", pg[i], prof[i].real(),
                      prof[i].imag(), std::norm(prof[i]));
        table << buf;
    }
    std::string path = (std::filesystem::path(g.out_dir()) / "eigvec_profile.csv").string();
    bf::write_text_file(path, table.str());

    json doc = {{"table", path},
                {"which", which},
                {"N", N},
                {"lambda", format_real(lambda)},
                {"points", points}};
    std::ostringstream os;
    os << "lambda_" << which << "(" << N << ") = " << format_real(lambda) << "\n"
       << "table " << path << "\n";
    emit(g, doc, os.str());
    write_manifest(g, "eigvec",
                   {{"M", std::to_string(mo.M)},
                    {"N", std::to_string(N)},
                    {"which", which},
                    {"grid", grid.to_kv()},
                    {"spec", spec.to_kv()},
                    {"scale", scale},
                    {"pmin", std::to_string(pmin)},
                    {"pmax", std::to_string(pmax)},
                    {"points", std::to_string(points)}},
                   t0);
    return 0;
}

int cmd_trial(const GlobalOpts& g, int M, double epsilon) {
    auto t0 = std::chrono::steady_clock::now();
    bf::TrialExpectation t = bf::trial_state_expectation(M, epsilon);
    bool satisfied = t.value >= t.analytic_bound;
    json doc = {{"M", M},
                {"epsilon", epsilon},
                {"value", t.value},
                {"analytic_bound", t.analytic_bound},
                {"achieved_error", t.achieved_error},
                {"converged", t.converged},
                {"satisfied", satisfied}};
    if (!t.warning.empty()) doc["warning"] = t.warning;
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "value = %.12e\nanalytic_bound = %.12e\nsatisfied = %s\nachieved_error = "
                  "%.3e\n",
                  t.value, t.analytic_bound, satisfied ? "yes" : "no", t.achieved_error);
    os << buf;
    if (!t.warning.empty()) os << "warning: " << t.warning << "\n";
    emit(g, doc, os.str());
    write_manifest(g, "trial",
                   {{"M", std::to_string(M)}, {"epsilon", std::to_string(epsilon)}}, t0);
    return satisfied ? 0 : 1;
}

int cmd_classical(const GlobalOpts& g, const ModelOpts& mo, const std::string& ensemble,
                  double x, double p, double x0, double sx, double pmean, double x1, double p0,
                  double p1, long samples, std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    bf::TimeGrid grid = mo.grid();
    bf::Ensemble ens;
    if (ensemble == "point")
        ens = bf::point_mass_ensemble(x, p);
    else if (ensemble == "gauss")
        ens = bf::gaussian_exponential_ensemble(x0, sx, pmean);
    else if (ensemble == "box")
        ens = bf::uniform_box_ensemble(x0, x1, p0, p1);
    else
        throw bf::domain_error("--ensemble must be point, gauss, or box");
    bf::MCResult r = bf::classical_mc(ens, grid, samples, seed);
    json doc = {{"M", mo.M},
                {"ensemble", ensemble},
                {"samples", r.samples},
                {"seed", seed},
                {"estimate", r.estimate},
                {"std_error", r.std_error},
                {"hits", r.hits}};
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "estimate = %.8f\nstd_error = %.8f\nhits = %ld/%ld\n",
                  r.estimate, r.std_error, r.hits, r.samples);
    os << buf;
    emit(g, doc, os.str());
    write_manifest(g, "classical",
                   {{"M", std::to_string(mo.M)},
                    {"ensemble", ensemble},
                    {"samples", std::to_string(samples)},
                    {"seed", std::to_string(seed)}},
                   t0);
    return 0;
}

int cmd_certify(const GlobalOpts& g, const ModelOpts& mo, int N, long element_digits,
                long solver_digits) {
    auto t0 = std::chrono::steady_clock::now();
    bf::TimeGrid grid = mo.grid();
    bf::BasisSpec spec = mo.spec();
    bf::PrecisionPolicy pol = bf::PrecisionPolicy::for_dimension(N);
    if (element_digits > 0) pol.element_digits = element_digits;
    if (solver_digits > 0) pol.solver_digits = solver_digits;
    pol.validate();

    bf::MatrixPair pair =
        bf::build_pair(N, grid, spec, pol.element_digits, g.cache_dir(),
                       [](int d, int t) { progress_meter("elements", d, t); });
    bf::SpectrumResult res = bf::gevp_solve(pair, pol, bf::SolveMode::extremes, false);
    double lb = std::max(std::fabs(res.eigenvalues.front().lower_d()),
                         std::fabs(res.eigenvalues.back().upper_d())) +
                0.5;
    bf::ErrorCertificate cert = bf::certify(res, pair.element_radius(), N, lb);

    json doc = {{"N", N},
                {"issued", cert.issued},
                {"lambda_bound", cert.lambda_bound},
                {"message", cert.message}};
    std::ostringstream os;
    if (cert.issued) {
        bf::Real rmin = cert.radius_for(res.eigenvalues.front());
        bf::Real rmax = cert.radius_for(res.eigenvalues.back());
        doc["c_max"] = format_real(cert.c_max);
        doc["radius_min"] = format_real(rmin);
        doc["radius_max"] = format_real(rmax);
        doc["lambda_min"] = format_real(res.eigenvalues.front());
        doc["lambda_max"] = format_real(res.eigenvalues.back());
        os << "issued yes\n"
           << "lambda_min = " << format_real(res.eigenvalues.front()) << "  +- "
           << format_real(rmin) << "\n"
           << "lambda_max = " << format_real(res.eigenvalues.back()) << "  +- "
           << format_real(rmax) << "\n";
    } else {
        doc["required_digits"] = cert.required_digits;
        os << "issued no\n" << cert.message << "\n";
    }
    emit(g, doc, os.str());
    write_manifest(g, "certify",
                   {{"M", std::to_string(mo.M)},
                    {"N", std::to_string(N)},
                    {"grid", grid.to_kv()},
                    {"spec", spec.to_kv()},
                    {"element_digits", std::to_string(pol.element_digits)},
                    {"solver_digits", std::to_string(pol.solver_digits)}},
                   t0);
    return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& input, int M) {
    auto t0 = std::chrono::steady_clock::now();
    auto rows = bf::read_sweep_csv(input);
    if (rows.empty()) throw bf::domain_error("sweep table is empty: " + input);
    const auto& last = rows.back();
    bf::BoundsReport window = bf::bounds_report(M);

    json doc = {{"input", input},
                {"rows", rows.size()},
                {"N", last.N},
                {"lambda_back", last.lambda_back},
                {"lambda_over", last.lambda_over},
                {"cert_back", last.cert_back},
                {"cert_over", last.cert_over},
                {"window", {{"lower", window.lower}, {"upper", window.upper}}}};
    if (window.has_sharp_lower) doc["window"]["sharp_lower"] = window.sharp_lower;
    std::ostringstream os;
    os << "rows = " << rows.size() << "\n"
       << "lambda_back(" << last.N << ") = " << last.lambda_back << " (cert " << last.cert_back
       << ")\n"
       << "lambda_over(" << last.N << ") = " << last.lambda_over << " (cert " << last.cert_over
       << ")\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "window = [%.6f, %.6f]\n", window.lower, window.upper);
    os << buf;
    if (window.has_sharp_lower) {
        std::snprintf(buf, sizeof buf, "sharp_lower = %.9f\n", window.sharp_lower);
        os << buf;
    }
    emit(g, doc, os.str());
    write_manifest(g, "report", {{"input", input}, {"M", std::to_string(M)}}, t0);
    return 0;
}

// cache verify: structural scan + checksum, then recompute a sample of
// records at low precision and compare against the stored midpoints.
int cmd_cache_verify(const GlobalOpts& g, double sample_percent, long sample_digits,
                     std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    std::string dir = g.cache_dir();
    if (dir.empty()) throw bf::domain_error("no cache directory configured");
    auto reports = bf::cache_scan(dir);
    json doc;
    doc["files"] = json::array();
    int failures = 0;
    std::ostringstream os;
    for (const auto& rep : reports) {
        json f = {{"path", rep.path}, {"records", rep.records}, {"ok", rep.ok}};
        std::vector<std::string> offending;
        if (!rep.ok) {
            ++failures;
            f["error"] = rep.error;
        } else if (rep.records > 0) {
            // key <grid kv>|<spec kv>|digits=<d>
            std::string key = rep.key;
            auto p1 = key.find('|');
            auto p2 = key.rfind('|');
            if (p1 == std::string::npos || p2 == p1) {
                ++failures;
                f["error"] = "unparseable key line";
                f["ok"] = false;
            } else {
                bf::TimeGrid grid = bf::TimeGrid::from_kv(key.substr(0, p1));
                bf::BasisSpec spec = bf::BasisSpec::from_kv(key.substr(p1 + 1, p2 - p1 - 1));
                long digits = std::stol(key.substr(p2 + 1 + 7));
                bf::ElementCache cache(dir, grid, spec, digits);
                // Probe the first row to find the stored dimension.
                int dim = 0;
                bf::Complex probe(64);
                while (cache.lookup(0, dim, probe)) ++dim;
                long checked = 0, want = std::max<long>(
                                          1, std::lround(static_cast<double>(rep.records) *
                                                         sample_percent / 100.0));
                std::mt19937_64 eng(seed ^ bf::fnv64(rep.path));
                for (long s = 0; s < want && dim > 0; ++s) {
                    std::uniform_int_distribution<int> pick(0, dim - 1);
                    int m = pick(eng), n = pick(eng);
                    if (m > n) std::swap(m, n);
                    bf::Complex stored(64);
                    if (!cache.lookup(m, n, stored)) continue;
                    bf::Complex fresh = bf::mfold_element(m, n, grid, spec, sample_digits);
                    bf::Complex diff = stored - fresh;
                    if (!diff.re.contains_zero() || !diff.im.contains_zero()) {
                        offending.push_back("(" + std::to_string(m) + "," + std::to_string(n) +
                                            ")");
                    }
                    ++checked;
                }
                f["sampled"] = checked;
                f["dim"] = dim;
                if (!offending.empty()) {
                    ++failures;
                    f["ok"] = false;
                    f["mismatched"] = offending;
                }
            }
        }
        os << rep.path << " records=" << rep.records
           << (f["ok"].get<bool>() ? " ok" : " FAILED");
        if (f.contains("sampled")) os << " sampled=" << f["sampled"].get<long>();
        for (const auto& k : offending) os << " " << k;
        os << "\n";
        doc["files"].push_back(f);
    }
    doc["failures"] = failures;
    os << "failures = " << failures << "\n";
    emit(g, doc, os.str());
    write_manifest(g, "cache",
                   {{"action", "verify"},
                    {"sample_percent", std::to_string(sample_percent)},
                    {"sample_digits", std::to_string(sample_digits)}},
                   t0);
    return failures == 0 ? 0 : 1;
}

int cmd_cache_gc(const GlobalOpts& g, const ModelOpts& mo) {
    auto t0 = std::chrono::steady_clock::now();
    std::string dir = g.cache_dir();
    if (dir.empty()) throw bf::domain_error("no cache directory configured");
    std::size_t removed = bf::cache_gc(dir, mo.grid(), mo.spec());
    json doc = {{"removed", removed}};
    std::ostringstream os;
    os << "removed = " << removed << "\n";
    emit(g, doc, os.str());
    write_manifest(g, "cache", {{"action", "gc"}, {"M", std::to_string(mo.M)}}, t0);
    return 0;
}

int cmd_cache_export(const GlobalOpts& g, const std::string& bundle, bool import_mode) {
    auto t0 = std::chrono::steady_clock::now();
    std::string dir = g.cache_dir();
    if (dir.empty()) throw bf::domain_error("no cache directory configured");
    json doc;
    std::ostringstream os;
    if (import_mode) {
        auto files = bf::cache_import(bundle, dir);
        doc = {{"imported", files}};
        os << "imported = " << files.size() << " file(s)\n";
    } else {
        bf::cache_export(dir, bundle);
        doc = {{"bundle", bundle}};
        os << "bundle " << bundle << "\n";
    }
    emit(g, doc, os.str());
    write_manifest(g, "cache",
                   {{"action", import_mode ? "import" : "export"}, {"bundle", bundle}}, t0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-precision laboratory for M-fold quantum backflow"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "flat key=value configuration file");
    app.add_option("--cache-dir", g.cache_dir_flag,
                   "element cache directory (overrides BACKFLOW_CACHE_DIR)");
    app.add_option("--out-dir", g.out_dir_flag,
                   "output directory (overrides BACKFLOW_OUT_DIR)");
    app.add_option("--format", g.format, "stdout format: csv or json");
    app.add_option("--workers", g.workers,
                   "worker pool size (scheduling hint; 1 = sequential)");

    // gram ----------------------------------------------------------------
    auto* gram = app.add_subcommand("gram", "basis overlap integral");
    long gm = 0, gn = 0, gdigits = 40;
    double gdelta = -0.25;
    gram->add_option("--m", gm)->required();
    gram->add_option("--n", gn)->required();
    gram->add_option("--delta", gdelta);
    gram->add_option("--digits", gdigits);

    // matrix --------------------------------------------------------------
    auto* matrix = app.add_subcommand("matrix", "backflow operator elements");
    ModelOpts mo_matrix;
    mo_matrix.add_flags(matrix);
    long mm = 0, mn = 0, mdigits = 40;
    int mdim = 0;
    matrix->add_option("--m", mm);
    matrix->add_option("--n", mn);
    matrix->add_option("--dim", mdim, "emit the full leading block of this size");
    matrix->add_option("--digits", mdigits);

    // sweep ---------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "extreme eigenvalues for N = 1..Nmax");
    ModelOpts mo_sweep;
    mo_sweep.add_flags(sweep);
    int sNmax = 0;
    long s_ed = 0, s_sd = 0;
    std::string s_out;
    sweep->add_option("--Nmax", sNmax)->required()->check(CLI::PositiveNumber);
    sweep->add_option("--element-digits", s_ed, "override precision policy");
    sweep->add_option("--solver-digits", s_sd, "override precision policy");
    sweep->add_option("--out", s_out, "output table name");

    // accelerate ----------------------------------------------------------
    auto* acc = app.add_subcommand("accelerate", "convergence acceleration on a stored sweep");
    std::string a_in, a_col = "back", a_ladder, a_kz;
    bool a_rd = false, a_pair = false;
    long a_digits = 80;
    acc->add_option("--input", a_in)->required();
    acc->add_option("--column", a_col, "back or over");
    acc->add_option("--ladder", a_ladder, "comma-separated exponents, first must be 0");
    acc->add_option("--kz", a_kz, "m,k smoothing parameters");
    acc->add_flag("--rd", a_rd, "apply the ratio-difference transform");
    acc->add_flag("--pair", a_pair, "also compute the extended-ladder companion bound");
    acc->add_option("--digits", a_digits, "parse precision for table values");

    // eigvec ----------------------------------------------------------------
    auto* ev = app.add_subcommand("eigvec", "momentum profile of an extreme eigenvector");
    ModelOpts mo_ev;
    mo_ev.add_flags(ev);
    int eN = 0, e_points = 200;
    double e_pmin = 1e-3, e_pmax = 50.0;
    bool e_log = false;
    std::string e_which = "back", e_scale = "none";
    long e_ed = 0, e_sd = 0;
    ev->add_option("--N", eN)->required()->check(CLI::PositiveNumber);
    ev->add_option("--which", e_which, "back or over");
    ev->add_option("--pmin", e_pmin);
    ev->add_option("--pmax", e_pmax);
    ev->add_option("--points", e_points);
    ev->add_flag("--log", e_log, "logarithmic momentum grid");
    ev->add_option("--scale", e_scale, "none or p34 (multiply by p^{3/4})");
    ev->add_option("--element-digits", e_ed);
    ev->add_option("--solver-digits", e_sd);

    // trial -----------------------------------------------------------------
    auto* trial = app.add_subcommand("trial", "closed-form trial-state lower bound check");
    int tM = 2;
    double t_eps = 0.1;
    trial->add_option("--M", tM)->required();
    trial->add_option("--epsilon", t_eps)->required();

    // classical ---------------------------------------------------------------
    auto* cls = app.add_subcommand("classical", "Monte-Carlo classical current estimate");
    ModelOpts mo_cls;
    mo_cls.add_flags(cls);
    std::string c_ens = "point";
    double c_x = 1.0, c_p = 1.0, c_x0 = 0.0, c_sx = 1.0, c_pmean = 1.0, c_x1 = 1.0, c_p0 = 0.0,
           c_p1 = 1.0;
    long c_samples = 100000;
    std::uint64_t c_seed = 1;
    cls->add_option("--ensemble", c_ens, "point, gauss, or box");
    cls->add_option("--x", c_x);
    cls->add_option("--p", c_p);
    cls->add_option("--x0", c_x0);
    cls->add_option("--sx", c_sx);
    cls->add_option("--pmean", c_pmean);
    cls->add_option("--x1", c_x1);
    cls->add_option("--p0", c_p0);
    cls->add_option("--p1", c_p1);
    cls->add_option("--samples", c_samples)->check(CLI::PositiveNumber);
    cls->add_option("--seed", c_seed);

    // certify ------------------------------------------------------------------
    auto* cert = app.add_subcommand("certify", "issue eigenvalue error certificates");
    ModelOpts mo_cert;
    mo_cert.add_flags(cert);
    int cN = 0;
    long ct_ed = 0, ct_sd = 0;
    cert->add_option("--N", cN)->required()->check(CLI::PositiveNumber);
    cert->add_option("--element-digits", ct_ed);
    cert->add_option("--solver-digits", ct_sd);

    // report ---------------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "headline numbers from a stored sweep");
    std::string r_in;
    int rM = 1;
    rep->add_option("--input", r_in)->required();
    rep->add_option("--M", rM);

    // cache ------------------------------------------------------------------------
    auto* cache = app.add_subcommand("cache", "cache administration");
    cache->require_subcommand(1);
    auto* cv = cache->add_subcommand("verify", "checksums plus recomputed sample");
    double v_pct = 1.0;
    long v_digits = 20;
    std::uint64_t v_seed = 1;
    cv->add_option("--sample-percent", v_pct);
    cv->add_option("--sample-digits", v_digits);
    cv->add_option("--seed", v_seed);
    auto* cg = cache->add_subcommand("gc", "drop records for one grid+basis key");
    ModelOpts mo_gc;
    mo_gc.add_flags(cg);
    auto* ce = cache->add_subcommand("export", "bundle all cache files");
    std::string ce_bundle;
    ce->add_option("--bundle", ce_bundle)->required();
    auto* ci = cache->add_subcommand("import", "unpack a cache bundle");
    std::string ci_bundle;
    ci->add_option("--bundle", ci_bundle)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        g.resolve();
        if (gram->parsed()) return cmd_gram(g, gm, gn, gdelta, gdigits);
        if (matrix->parsed()) return cmd_matrix(g, mo_matrix, mm, mn, mdim, mdigits);
        if (sweep->parsed()) return cmd_sweep(g, mo_sweep, sNmax, s_ed, s_sd, s_out);
        if (acc->parsed())
            return cmd_accelerate(g, a_in, a_col, a_ladder, a_kz, a_rd, a_digits, a_pair);
        if (ev->parsed())
            return cmd_eigvec(g, mo_ev, eN, e_which, e_pmin, e_pmax, e_points, e_log, e_scale,
                              e_ed, e_sd);
        if (trial->parsed()) return cmd_trial(g, tM, t_eps);
        if (cls->parsed())
            return cmd_classical(g, mo_cls, c_ens, c_x, c_p, c_x0, c_sx, c_pmean, c_x1, c_p0,
                                 c_p1, c_samples, c_seed);
        if (cert->parsed()) return cmd_certify(g, mo_cert, cN, ct_ed, ct_sd);
        if (rep->parsed()) return cmd_report(g, r_in, rM);
        if (cache->parsed()) {
            if (cv->parsed()) return cmd_cache_verify(g, v_pct, v_digits, v_seed);
            if (cg->parsed()) return cmd_cache_gc(g, mo_gc);
            if (ce->parsed()) return cmd_cache_export(g, ce_bundle, false);
            if (ci->parsed()) return cmd_cache_export(g, ci_bundle, true);
        }
        throw bf::domain_error("no subcommand selected");
    } catch (const std::exception& e) {
        const char* type = "error";
        if (dynamic_cast<const bf::domain_error*>(&e)) type = "domain_error";
        else if (dynamic_cast<const bf::branch_error*>(&e)) type = "branch_error";
        else if (dynamic_cast<const bf::precision_error*>(&e)) type = "precision_error";
        else if (dynamic_cast<const bf::cache_error*>(&e)) type = "cache_error";
        json err = {{"error", {{"type", type}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
