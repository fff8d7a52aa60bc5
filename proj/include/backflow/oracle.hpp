#pragma once

#include <complex>

#include "backflow/basis.hpp"
#include "backflow/grid.hpp"

namespace backflow {

// Independent double-precision evaluation of <psi_m | C psi_n> by adaptive
// 2-D quadrature of the defining kernel integral.  Deliberately shares no
// code with the closed-form element path; used to pin index conventions and
// validate the certified evaluator.
//
// The integration domain is truncated at p, q <= 40/a (the e^{-aq} factor
// bounds the discarded tail below ~1e-10 for m, n <= 8), and the kernel's
// removable singularity at p = q is handled by a series for |p - q| < 1e-6.
// `err_out`, if given, receives the quadrature's own error estimate plus the
// truncation allowance.  Intended for m, n <= ~8 (cost grows quickly).
std::complex<double> quadrature_oracle(long m, long n, const TimeGrid& grid,
                                       const BasisSpec& spec, double tol = 2e-9,
                                       double* err_out = nullptr);

// Same idea for the Gram matrix: direct quadrature of int psi_m psi_n dq.
double gram_quadrature(long m, long n, const BasisSpec& spec, double tol = 1e-12,
                       double* err_out = nullptr);

}  // namespace backflow
