#pragma once

#include "backflow/basis.hpp"
#include "backflow/complex.hpp"
#include "backflow/grid.hpp"
#include "backflow/prec.hpp"

namespace backflow {

// Certified value of the interval integral
//   J(s1, s2; alpha, beta; a) = int_{s1}^{s2} (a - it)^{-alpha-1} (a + it)^{-beta-1} dt
// via the incomplete-beta closed form at the endpoints z(s) = 2a/(a - is),
// with the endpoint phase e^{-i pi sgn(s) (beta+1)} and, when s1 < 0 < s2,
// the additive term 2 pi (2a)^{-alpha-beta-1} Gamma(alpha+beta+1) /
// (Gamma(alpha+1) Gamma(beta+1)).
//
// Preconditions: s1 < s2, both nonzero; alpha, beta exact; alpha+beta > -1;
// a > 0.  Throws domain_error on violations, precision_error if the radius
// target cannot be met after escalation.
Complex j_eval(double s1, double s2, const Real& alpha, const Real& beta, double a, long digits);

// Coefficient D_{f,s} coupling basis indices to the interval integrals:
//   pi sqrt(2) (2a)^{f+s+2delta+1} sqrt(B_diag(f+delta+1/2) B_diag(s+delta+1/2))
//     / ( B(f+delta+1/2, 3/4) B(s+delta+1/2, 1/4) ).
// Note the asymmetry: the first index pairs with 3/4, the second with 1/4.
Real element_coeff(long first, long second, const BasisSpec& spec, long digits);

// Certified matrix element <psi_m | C_grid psi_n>, summed over the grid's
// intervals.  The assembled matrix is Hermitian by construction, and real
// (within radius) for grids symmetric about 0.  The returned ball's radius
// is at most 10^-digits (absolute).
Complex mfold_element(long m, long n, const TimeGrid& grid, const BasisSpec& spec, long digits);

inline Complex mfold_element(long m, long n, const TimeGrid& grid, const BasisSpec& spec,
                             const PrecisionPolicy& policy) {
    return mfold_element(m, n, grid, spec, -policy.target_radius_log10);
}

}  // namespace backflow
