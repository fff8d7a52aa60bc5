#include "backflow/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace backflow {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty() || times_.size() % 2 != 0)
        throw domain_error("time grid must contain 2M instants (even count >= 2)");
    for (double t : times_) {
        if (!std::isfinite(t)) throw domain_error("time grid entries must be finite");
        if (t == 0.0)
            throw domain_error(
                "time grid entries must be nonzero; translate the grid by a constant "
                "(the spectrum is translation invariant)");
    }
    for (size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i - 1] < times_[i]))
            throw domain_error("time grid entries must be strictly increasing");
}

bool TimeGrid::symmetric() const {
    size_t n = times_.size();
    for (size_t i = 0; i < n; ++i)
        if (times_[i] != -times_[n - 1 - i]) return false;
    return true;
}

std::string TimeGrid::to_kv() const {
    std::string out = "times=";
    char buf[64];
    for (size_t i = 0; i < times_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%a", times_[i]);
        if (i) out += ',';
        out += buf;
    }
    return out;
}

TimeGrid TimeGrid::from_kv(const std::string& kv) {
    const std::string key = "times=";
    size_t pos = kv.find(key);
    if (pos == std::string::npos) throw domain_error("grid serialization missing 'times=' key");
    std::string list = kv.substr(pos + key.size());
    // Stop at whitespace or a following key.
    size_t end = list.find_first_of(" \t\r\n;");
    if (end != std::string::npos) list = list.substr(0, end);
    std::vector<double> ts;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw domain_error("grid serialization has an empty entry");
        char* endp = nullptr;
        double v = std::strtod(item.c_str(), &endp);
        if (endp == item.c_str() || *endp != '\0')
            throw domain_error("grid serialization has a malformed entry: " + item);
        ts.push_back(v);
    }
    return TimeGrid(std::move(ts));
}

std::vector<double> srsd(const TimeGrid& g) {
    const std::vector<double>& t = g.times();
    std::vector<double> out;
    if (t.size() < 3) return out;
    out.reserve(t.size() - 2);
    for (size_t i = 0; i + 2 < t.size(); ++i)
        out.push_back((t[i + 2] - t[i + 1]) / (t[i + 1] - t[i]));
    return out;
}

TimeGrid equal_spacing_grid(int M, double T) {
    if (M < 1) throw domain_error("interval count M must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw domain_error("spacing T must be positive");
    std::vector<double> ts;
    ts.reserve(2 * static_cast<size_t>(M));
    for (int j = M; j >= 1; --j) ts.push_back(-T * (2 * j - 1) / 2.0);
    for (int j = 1; j <= M; ++j) ts.push_back(T * (2 * j - 1) / 2.0);
    return TimeGrid(std::move(ts));
}

}  // namespace backflow
