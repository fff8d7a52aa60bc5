#pragma once

#include <climits>
#include <functional>
#include <string>
#include <vector>

#include "backflow/cache.hpp"
#include "backflow/elements.hpp"

namespace backflow {

// A congruent matrix pair (A, B): A the Hermitian compressed-operator matrix,
// B the symmetric positive-definite overlap (Gram) matrix, both dim x dim,
// entries certified balls with radius at most 10^-element_digits.
//
// complex_mode is false exactly when the time grid is symmetric about 0; the
// matrix A is then real (each entry's imaginary ball contains 0 and only the
// real parts feed the solver).  Leading principal blocks of a pair built at a
// larger dimension are themselves valid pairs (nesting).
struct MatrixPair {
    int dim = 0;
    TimeGrid grid{{-0.5, 0.5}};
    BasisSpec spec;
    long element_digits = 0;
    bool complex_mode = false;
    std::vector<Complex> a;  // row-major, Hermitian
    std::vector<Real> b;     // row-major, symmetric, unit diagonal
    long a_rad_log2 = LONG_MIN;  // max entry radius <= 2^a_rad_log2 (modulus bound)
    long b_rad_log2 = LONG_MIN;

    const Complex& A(int i, int j) const { return a[static_cast<std::size_t>(i) * dim + j]; }
    const Real& B(int i, int j) const { return b[static_cast<std::size_t>(i) * dim + j]; }

    // Upper bound on every entry radius of both matrices, as an exact Real.
    Real element_radius() const;
};

// Exact power of two 2^e as a zero-radius Real (e may be very negative).
Real real_pow2(long e, mpfr_prec_t prec = 64);

// Builds the pair, reading/writing an element cache when cache_dir is
// nonempty.  Cached midpoints are stored with two extra certified digits so
// that reload inflation keeps entries within 10^-element_digits.  progress
// (optional) is called after each matrix entry with (done, total).
MatrixPair build_pair(int dim, const TimeGrid& grid, const BasisSpec& spec, long element_digits,
                      const std::string& cache_dir = "",
                      const std::function<void(int, int)>& progress = {});

}  // namespace backflow
