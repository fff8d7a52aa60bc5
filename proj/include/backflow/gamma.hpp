#pragma once

#include "backflow/real.hpp"

namespace backflow {

// Certified Gamma-family values for real arguments (positive reals plus
// negative non-integers via the recursion Gamma(x) = Gamma(x+m)/prod(x+j)).
// Poles (nonpositive integers inside the argument interval) raise
// domain_error.  The `digits` overloads retry at doubled working precision
// until the result has relative width <= 10^-digits.
Real gamma_ball(const Real& x, mpfr_prec_t wp);
Real gamma_v(const Real& x, long digits);

// B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)
Real beta_v(const Real& x, const Real& y, long digits);
// B_diag(x) = B(x, x)
Real beta_diag_v(const Real& x, long digits);

// True iff rad <= |mid| * 10^-digits (0-radius passes; 0 midpoint fails
// unless the radius is also 0).
bool rel_width_ok(const Real& x, long digits);

}  // namespace backflow
