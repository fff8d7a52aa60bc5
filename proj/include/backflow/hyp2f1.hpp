#pragma once

#include "backflow/complex.hpp"

namespace backflow {

// Gauss hypergeometric function 2F1(a, b; c; z) on the principal branch
// (cut along [1, inf)), as a certified complex ball containing the true
// value.
//
// Requirements:
//  - a, b, c exact (zero-radius) Reals; c not a nonpositive integer.
//  - The argument box must not touch [1, inf).  For boxes that straddle the
//    real axis with Re z < 1 the function is analytic across the axis, so
//    any midpoint works; otherwise the midpoint's half plane selects the
//    continuation path, which must match the true argument's side.
//
// The result satisfies rad <= 10^-digits * (|mid| + 1); if this cannot be
// achieved the call throws precision_error.  Inadmissible arguments throw
// domain_error / branch_error.
Complex hyp2f1(const Real& a, const Real& b, const Real& c, const Complex& z, long digits);

// Lower incomplete beta function B(mu, nu; z) = int_0^z t^(mu-1)(1-t)^(nu-1) dt
// along a path on principal branches, computed as (z^mu / mu) 2F1(mu, 1-nu;
// mu+1; z).  mu, nu must be exact, mu > 0; the argument box must avoid both
// (-inf, 0] and [1, inf).  Same width guarantee and failure contract as
// hyp2f1.
Complex incomplete_beta(const Real& mu, const Real& nu, const Complex& z, long digits);

}  // namespace backflow
