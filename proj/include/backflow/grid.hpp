#pragma once

#include <string>
#include <vector>

#include "backflow/errors.hpp"

namespace backflow {

// An ordered list of 2M nonzero instants t_1 < ... < t_2M (units with
// hbar = 1, mass mu = 1/2).  Interval k is [t_{2k-1}, t_{2k}].
//
// Zero entries are rejected: the closed-form interval integrals are evaluated
// at endpoint arguments z(s) = 2a/(a - is), and s = 0 puts z = 2 on the
// hypergeometric branch cut.  Translating every time by the same constant
// leaves the spectrum invariant, so callers can always shift away from 0.
class TimeGrid {
  public:
    explicit TimeGrid(std::vector<double> times);

    int fold() const { return static_cast<int>(times_.size() / 2); }
    const std::vector<double>& times() const { return times_; }
    double front() const { return times_.front(); }
    double back() const { return times_.back(); }

    // t_i = -t_{2M+1-i} for all i (exact double comparison).
    bool symmetric() const;

    // Deterministic key=value serialization (hex floats, exact round-trip).
    std::string to_kv() const;
    static TimeGrid from_kv(const std::string& kv);

    bool operator==(const TimeGrid& o) const { return times_ == o.times_; }

  private:
    std::vector<double> times_;
};

// Successive ratios of successive differences: with d_i = t_{i+1} - t_i,
// returns (d_2/d_1, ..., d_{2M-1}/d_{2M-2}); empty for M = 1.  These 2M-2
// positive numbers are the only dimensionless shape parameters of the grid.
std::vector<double> srsd(const TimeGrid& g);

// <-T(2M-1)/2, ..., -T/2, T/2, ..., T(2M-1)/2>; srsd = (1,...,1).
TimeGrid equal_spacing_grid(int M, double T);

}  // namespace backflow
