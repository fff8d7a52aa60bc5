#include "backflow/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "backflow/errors.hpp"
#include "backflow/prec.hpp"

namespace backflow {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "backflow-element-cache v1";

std::uint64_t pack_mn(long m, long n) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)) << 32) |
           static_cast<std::uint32_t>(n);
}

struct FileLock {
    int fd;
    FileLock(int fd_, int op) : fd(fd_) {
        while (flock(fd, op) != 0) {
            if (errno != EINTR) throw cache_error("flock failed on element cache");
        }
    }
    ~FileLock() { flock(fd, LOCK_UN); }
};

std::string rexp_str(long e) {
    if (e == LONG_MIN) return "z";
    return std::to_string(e);
}

bool parse_rexp(const std::string& s, long& out) {
    if (s == "z") {
        out = LONG_MIN;
        return true;
    }
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0') return false;
    out = v;
    return true;
}

}  // namespace

std::uint32_t crc32_bytes(const void* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

std::uint64_t fnv64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string ElementCache::key_line(const TimeGrid& grid, const BasisSpec& spec, long digits) {
    return "key " + grid.to_kv() + "|" + spec.to_kv() + "|digits=" + std::to_string(digits);
}

std::string ElementCache::file_name(const TimeGrid& grid, const BasisSpec& spec, long digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c_%016llx.bfc",
                  static_cast<unsigned long long>(fnv64(key_line(grid, spec, digits))));
    return buf;
}

ElementCache::ElementCache(std::string dir, const TimeGrid& grid, const BasisSpec& spec,
                           long digits)
    : dir_(std::move(dir)), digits_(digits) {
    if (digits_ < 1) throw domain_error("cache digit count must be positive");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw cache_error("cannot create cache directory " + dir_ + ": " + ec.message());
    key_ = key_line(grid, spec, digits);
    path_ = (fs::path(dir_) / file_name(grid, spec, digits)).string();
    load_();
}

void ElementCache::load_() {
    int fd = ::open(path_.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd < 0) throw cache_error("cannot open cache file " + path_);
    try {
        FileLock lk(fd, LOCK_EX);
        struct stat st{};
        if (fstat(fd, &st) != 0) throw cache_error("fstat failed on " + path_);
        if (st.st_size == 0) {
            std::string hdr = std::string(kMagic) + "\n" + key_ + "\n";
            if (::write(fd, hdr.data(), hdr.size()) != static_cast<ssize_t>(hdr.size()))
                throw cache_error("cannot write cache header to " + path_);
            ::close(fd);
            return;
        }
        std::string content(static_cast<std::size_t>(st.st_size), '\0');
        ssize_t got = ::pread(fd, content.data(), content.size(), 0);
        if (got != st.st_size) throw cache_error("short read on " + path_);
        ::close(fd);
        fd = -1;

        std::istringstream in(content);
        std::string line;
        if (!std::getline(in, line) || line != kMagic)
            throw cache_error("bad cache magic in " + path_);
        if (!std::getline(in, line) || line != key_)
            throw cache_error("cache key mismatch in " + path_ +
                              " (hash collision or corrupted header)");
        bool ended_with_newline = !content.empty() && content.back() == '\n';
        std::string pending;
        while (std::getline(in, pending)) {
            // A final line without a terminating newline is a torn write: skip it.
            if (in.eof() && !ended_with_newline) break;
            line = pending;
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string tag, re_mid, re_rexp_s, im_mid, im_rexp_s, crc_s;
            long m, n;
            if (!(ls >> tag >> m >> n >> re_mid >> re_rexp_s >> im_mid >> im_rexp_s >> crc_s) ||
                tag != "e")
                throw cache_error("malformed cache record in " + path_ + ": " + line);
            std::string extra;
            if (ls >> extra) throw cache_error("trailing data in cache record: " + line);
            std::size_t body_len = line.size() - crc_s.size() - 1;
            std::uint32_t want = crc32_bytes(line.data(), body_len);
            std::uint32_t got_crc =
                static_cast<std::uint32_t>(std::strtoul(crc_s.c_str(), nullptr, 16));
            if (want != got_crc)
                throw cache_error("cache checksum failure in " + path_ + " at record " + line);
            Rec rec;
            rec.re_mid = re_mid;
            rec.im_mid = im_mid;
            if (!parse_rexp(re_rexp_s, rec.re_rexp) || !parse_rexp(im_rexp_s, rec.im_rexp))
                throw cache_error("bad radius exponent in cache record: " + line);
            map_[pack_mn(m, n)] = std::move(rec);
        }
    } catch (...) {
        if (fd >= 0) ::close(fd);
        throw;
    }
}

Complex ElementCache::rebuild_(const Rec& rec) const {
    mpfr_prec_t prec = bits_for_digits(digits_ + 14);
    Real re = Real::of_str(rec.re_mid.c_str(), prec);
    Real im = Real::of_str(rec.im_mid.c_str(), prec);
    // Decimal round-trip slop: the stored string carries digits+13 significant
    // digits, so printing cost at most half a unit in the last place.  Bound it
    // by |mid| * 10^-(digits+12) <= 2^(mid_exp - 3.32*(digits+12)).
    auto decimal_slop = [&](Real& r) {
        if (!mpfr_zero_p(r.mid())) {
            long e = mpfr_get_exp(r.mid());
            r.add_error_2exp(e - static_cast<long>(3.321 * (digits_ + 12)));
        }
    };
    decimal_slop(re);
    decimal_slop(im);
    if (rec.re_rexp != LONG_MIN) re.add_error_2exp(rec.re_rexp);
    if (rec.im_rexp != LONG_MIN) im.add_error_2exp(rec.im_rexp);
    return Complex(std::move(re), std::move(im));
}

bool ElementCache::lookup(long m, long n, Complex& out) const {
    auto it = map_.find(pack_mn(m, n));
    if (it == map_.end()) return false;
    out = rebuild_(it->second);
    return true;
}

void ElementCache::store(long m, long n, const Complex& value) {
    Rec rec;
    rec.re_mid = value.re.mid_string(digits_ + 12);
    rec.im_mid = value.im.mid_string(digits_ + 12);
    rec.re_rexp = value.re.rad_log2_ceil();
    rec.im_rexp = value.im.rad_log2_ceil();

    std::ostringstream body;
    body << "e " << m << " " << n << " " << rec.re_mid << " " << rexp_str(rec.re_rexp) << " "
         << rec.im_mid << " " << rexp_str(rec.im_rexp);
    std::string b = body.str();
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", crc32_bytes(b.data(), b.size()));
    std::string line = b + " " + crc + "\n";

    int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND);
    if (fd < 0) throw cache_error("cannot open cache file for append: " + path_);
    {
        FileLock lk(fd, LOCK_EX);
        if (::write(fd, line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
            ::close(fd);
            throw cache_error("short write appending to " + path_);
        }
    }
    ::close(fd);
    map_[pack_mn(m, n)] = std::move(rec);
}

std::vector<CacheFileReport> cache_scan(const std::string& dir) {
    std::vector<CacheFileReport> out;
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& ent : fs::directory_iterator(dir))
        if (ent.is_regular_file() && ent.path().extension() == ".bfc") files.push_back(ent.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        CacheFileReport rep;
        rep.path = p.string();
        std::ifstream in(p);
        std::string line;
        if (!std::getline(in, line) || line != kMagic) {
            rep.error = "bad magic";
            out.push_back(std::move(rep));
            continue;
        }
        if (!std::getline(in, rep.key) || rep.key.rfind("key ", 0) != 0) {
            rep.error = "bad key line";
            out.push_back(std::move(rep));
            continue;
        }
        rep.ok = true;
        std::string prev;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string tag, re_mid, re_rexp, im_mid, im_rexp, crc_s;
            long m, n;
            if (!(ls >> tag >> m >> n >> re_mid >> re_rexp >> im_mid >> im_rexp >> crc_s) ||
                tag != "e") {
                if (in.eof()) break;  // torn final line tolerated
                rep.ok = false;
                rep.error = "malformed record: " + line;
                break;
            }
            std::size_t body_len = line.size() - crc_s.size() - 1;
            std::uint32_t want = crc32_bytes(line.data(), body_len);
            std::uint32_t got =
                static_cast<std::uint32_t>(std::strtoul(crc_s.c_str(), nullptr, 16));
            if (want != got) {
                rep.ok = false;
                rep.error = "checksum failure: " + line;
                break;
            }
            ++rep.records;
        }
        out.push_back(std::move(rep));
    }
    return out;
}

std::size_t cache_gc(const std::string& dir, const TimeGrid& grid, const BasisSpec& spec) {
    std::size_t removed = 0;
    std::string match = "key " + grid.to_kv() + "|" + spec.to_kv() + "|digits=";
    for (const auto& rep : cache_scan(dir)) {
        if (rep.key.rfind(match, 0) == 0) {
            std::error_code ec;
            if (fs::remove(rep.path, ec)) ++removed;
        }
    }
    return removed;
}

void cache_export(const std::string& dir, const std::string& bundle_path) {
    std::vector<fs::path> files;
    if (fs::exists(dir))
        for (const auto& ent : fs::directory_iterator(dir))
            if (ent.is_regular_file() && ent.path().extension() == ".bfc")
                files.push_back(ent.path());
    std::sort(files.begin(), files.end());
    std::ofstream out(bundle_path, std::ios::binary);
    if (!out) throw cache_error("cannot open bundle for writing: " + bundle_path);
    out << "backflow-cache-bundle v1\n";
    for (const auto& p : files) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string bytes = ss.str();
        out << "file " << p.filename().string() << " " << bytes.size() << "\n";
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw cache_error("short write while exporting bundle " + bundle_path);
}

std::vector<std::string> cache_import(const std::string& bundle_path, const std::string& dir) {
    std::ifstream in(bundle_path, std::ios::binary);
    if (!in) throw cache_error("cannot open bundle " + bundle_path);
    std::string line;
    if (!std::getline(in, line) || line != "backflow-cache-bundle v1")
        throw cache_error("bad bundle magic in " + bundle_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::vector<std::string> written;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag, name;
        std::size_t size;
        if (!(ls >> tag >> name >> size) || tag != "file")
            throw cache_error("malformed bundle entry: " + line);
        if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
            throw cache_error("unsafe file name in bundle: " + name);
        std::string bytes(size, '\0');
        in.read(bytes.data(), static_cast<std::streamsize>(size));
        if (static_cast<std::size_t>(in.gcount()) != size)
            throw cache_error("truncated bundle payload for " + name);
        fs::path dest = fs::path(dir) / name;
        if (fs::exists(dest)) {
            std::ifstream old(dest, std::ios::binary);
            std::ostringstream ss;
            ss << old.rdbuf();
            if (ss.str() != bytes)
                throw cache_error("import would overwrite " + dest.string() +
                                  " with different content");
            written.push_back(name);
            continue;
        }
        std::ofstream out(dest, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw cache_error("cannot write " + dest.string());
        written.push_back(name);
    }
    return written;
}

}  // namespace backflow
