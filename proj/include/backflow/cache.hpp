#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "backflow/basis.hpp"
#include "backflow/complex.hpp"
#include "backflow/grid.hpp"

namespace backflow {

// CRC-32 (reflected polynomial 0xEDB88320) over a byte range.
std::uint32_t crc32_bytes(const void* data, std::size_t len);
// FNV-1a 64-bit hash of a string (used for cache file names).
std::uint64_t fnv64(const std::string& s);

// Append-only on-disk store for certified matrix elements, one file per
// (grid, spec, digits) key.  Layout (text, LF-terminated lines):
//
//   backflow-element-cache v1
//   key <grid kv>|<spec kv>|digits=<d>
//   e <m> <n> <re mid> <re rexp> <im mid> <im rexp> <crc32 hex>
//   ...
//
// Midpoints are decimal scientific strings carrying 12 guard digits beyond
// the certified digit count; <rexp> is the smallest integer e with
// radius <= 2^e, or the letter z for an exact (zero-radius) component.  The
// checksum covers the record line up to and including the second rexp field.
// Reloaded values are re-inflated by the stored radius plus the decimal
// round-trip slop, so a reloaded ball always contains the true value and its
// radius exceeds the stored one by less than 10^-(digits+10).
//
// Writers append whole lines under an exclusive flock; readers take a shared
// lock while scanning.  A truncated final line (e.g. a crashed writer) is
// ignored; any other malformed or checksum-failing record raises cache_error.
class ElementCache {
  public:
    ElementCache(std::string dir, const TimeGrid& grid, const BasisSpec& spec, long digits);

    long digits() const { return digits_; }
    const std::string& path() const { return path_; }
    std::size_t size() const { return map_.size(); }

    bool lookup(long m, long n, Complex& out) const;
    void store(long m, long n, const Complex& value);

    static std::string key_line(const TimeGrid& grid, const BasisSpec& spec, long digits);
    static std::string file_name(const TimeGrid& grid, const BasisSpec& spec, long digits);

  private:
    struct Rec {
        std::string re_mid, im_mid;
        long re_rexp, im_rexp;  // LONG_MIN encodes an exact component
    };

    void load_();
    Complex rebuild_(const Rec& rec) const;

    std::string dir_;
    std::string path_;
    std::string key_;
    long digits_;
    std::unordered_map<std::uint64_t, Rec> map_;
};

// Directory-level administration ------------------------------------------------

struct CacheFileReport {
    std::string path;
    std::string key;  // key line content (empty when the header is unreadable)
    std::size_t records = 0;
    bool ok = false;
    std::string error;
};

// Validate structure and checksums of every *.bfc file under dir.
std::vector<CacheFileReport> cache_scan(const std::string& dir);

// Remove every cache file (any digit count) for the given grid+spec key.
// Returns the number of files removed.
std::size_t cache_gc(const std::string& dir, const TimeGrid& grid, const BasisSpec& spec);

// Concatenate all cache files into a portable bundle / unpack a bundle.
// Round trip is byte-exact.  Import refuses to overwrite an existing file
// with different content.  Returns the file names written.
void cache_export(const std::string& dir, const std::string& bundle_path);
std::vector<std::string> cache_import(const std::string& bundle_path, const std::string& dir);

}  // namespace backflow
