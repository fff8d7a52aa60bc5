#pragma once
// Run output plumbing: deterministic CSV tables for spectrum sweeps, JSON run
// manifests, and flat key=value configuration with environment overrides.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "backflow/accel.hpp"
#include "backflow/analysis.hpp"

namespace backflow {

inline constexpr const char* kCodeVersion = "1.0.0";

// Version banner for manifests: code version plus the arithmetic libraries
// actually linked.
std::string code_version();

// --- Sweep tables -----------------------------------------------------------
// Header: N,lambda_back,lambda_over,cert_back,cert_over
// Eigenvalues are ball midpoints printed in scientific notation with enough
// decimal digits to reproduce the stored precision; certificate columns hold
// the certified error radii (0 when no certificate was issued).  Writing the
// same sweep twice yields byte-identical text.

std::string sweep_csv(const SpectrumSweep& sweep);
void write_sweep_csv(const SpectrumSweep& sweep, const std::string& path);

struct SweepRow {
    int N = 0;
    std::string lambda_back;
    std::string lambda_over;
    std::string cert_back;
    std::string cert_over;
};

std::vector<SweepRow> read_sweep_csv(const std::string& path);

// Rebuild an acceleration input from stored rows: values are parsed at the
// given precision; start_index is the first row's N (rows must be contiguous).
RealSequence sequence_from_rows(const std::vector<SweepRow>& rows, bool backflow_column,
                                mpfr_prec_t prec);

// --- Run manifests ----------------------------------------------------------
// One JSON document per CLI run recording the subcommand, its inputs, library
// versions, wall time, and a CRC digest of every cache file consulted.

struct CacheDigest {
    std::string file;    // basename within the cache directory
    std::string digest;  // crc32 of the file bytes, 8 hex digits
};

// Digest every cache file under dir (empty dir -> empty list).
std::vector<CacheDigest> cache_digests(const std::string& dir);

std::string manifest_json(const std::string& command,
                          const std::map<std::string, std::string>& inputs, double wall_seconds,
                          const std::vector<CacheDigest>& caches);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// --- Flat configuration -------------------------------------------------------
// Lines of KEY=VALUE; blank lines and lines starting with '#' are ignored.
// Recognized keys include cache_dir and out_dir; the environment variables
// BACKFLOW_CACHE_DIR and BACKFLOW_OUT_DIR override the file when set.

struct RunConfig {
    std::map<std::string, std::string> values;

    // Parse a config file; an empty path yields an empty config (defaults +
    // environment only).  Malformed lines raise domain_error.
    static RunConfig load(const std::string& path);

    std::string get(const std::string& key, const std::string& fallback) const;

    std::string cache_dir() const;  // env > file > "" (caching disabled)
    std::string out_dir() const;    // env > file > "."
};

}  // namespace backflow
