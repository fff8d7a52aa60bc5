#pragma once

#include <utility>
#include <vector>

#include "backflow/real.hpp"

namespace backflow {

// Contiguously indexed sequence of ball reals: values[i] carries the true
// index start_index + i.  All accelerators below use true-index semantics, so
// compositions keep the reported "N" labels aligned with the raw data.
struct RealSequence {
    long start_index = 1;
    std::vector<Real> values;

    long last_index() const { return start_index + static_cast<long>(values.size()) - 1; }
    const Real& at(long n) const;  // bounds-checked by true index
};

// Exponent ladder for the generalized subsampling accelerator: annihilates
// every term n^-gamma_i with i >= 2 while preserving the constant (gamma_1 =
// 0).  r are the subsample strides (default 1..k).
struct PowerLadder {
    std::vector<double> gammas;  // strictly increasing, gammas[0] == 0
    std::vector<long> r;         // strictly increasing positive integers, r[0] == 1

    static PowerLadder of(std::vector<double> gammas);  // default strides 1..k
    void validate() const;
};

// Weights v with sum_j v_j r_j^-gamma_i = [i == 1], solved by Gaussian
// elimination with partial pivoting at prec_bits working precision.
// Duplicate exponents make the system singular -> domain_error.
std::vector<Real> ladder_weights(const PowerLadder& ladder, mpfr_prec_t prec_bits);

// (R_gamma x)_n = (2^gamma x_{2n} - x_n) / (2^gamma - 1): annihilates a
// + b n^-gamma exactly, preserves limits.  Output indices n run over
// start_index <= n <= last_index/2.  gamma must be positive.
RealSequence richardson(const RealSequence& x, double gamma);

// (R_{gamma,r} x)_n = sum_j v_j x_{n r_j} with the ladder weights above.
// Output indices n satisfy n r_k <= last_index.
RealSequence generalized_richardson(const RealSequence& x, const PowerLadder& ladder);

// k passes of the centered m-point moving average (m odd), keeping only the
// fully covered region: each pass trims (m-1)/2 points per end and advances
// start_index accordingly.  Affine sequences pass through unchanged.
RealSequence kz_filter(const RealSequence& x, int m, int k);

// Nonlinear acceleration RD[x]_n = x_n - n D_n^2 / ((n+1) D_{n+1} - n D_n)
// with D_n = x_{n+1} - x_n.  Where the denominator cannot be bounded away
// from zero the update is dropped at that index (the raw value is carried
// through, keeping the output contiguous) and the index is flagged; a
// constant input therefore maps to the same constant with every index
// flagged.  The applicability test for this transform is that
//   (n+1) D_{n+1} / D_n - n
// tends to a negative limit; `condition` reports that expression per output
// index (NaN where D_n vanishes) so callers can inspect the tail.
struct RDResult {
    RealSequence accelerated;
    std::vector<long> flagged;      // true indices whose update was dropped
    std::vector<double> condition;  // one entry per output index
};
RDResult raabe_duhamel(const RealSequence& x);

// Asymptotic-decay diagnostic for sequences of the form x_n ~ a - beta n^-gamma:
// least squares of log|x_{N+1} - x_N| against log N over the tail (second half)
// gives gamma from the slope -(gamma+1) and beta from the intercept
// log(beta*gamma); beta carries the sign of the differences.  Additionally,
// for each grid gamma the Pearson correlation between N and
// mu(gamma)_N = N^(gamma+2) (x_{N+1} - x_N) is computed; the correlation
// peaks where mu is closest to linear in N, i.e. at the true decay exponent.
// All diagnostics are double precision.  A tail on which x is not strictly
// monotone rejects the fit.
struct ExponentFit {
    double beta = 0.0;
    double gamma = 0.0;
    double intercept = 0.0;                          // log(beta*gamma)
    double pearson_gamma = 0.0;                      // grid argmax
    std::vector<std::pair<double, double>> pearson;  // (gamma, rho) per grid entry
};
ExponentFit exponent_fit(const RealSequence& x, const std::vector<double>& gamma_grid);

}  // namespace backflow
