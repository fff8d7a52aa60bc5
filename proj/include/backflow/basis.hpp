#pragma once

#include <string>

#include "backflow/real.hpp"

namespace backflow {

// Parameters of the trial family psi_{n,a,delta}(q) = E_n q^{n+delta} e^{-aq}
// on L^2(R+, dq), with E_n = (2a)^{n+delta+1/2} / sqrt(Gamma(2n+2delta+1)).
// The span is dense for a > 0 and |delta| < 1/2.
struct BasisSpec {
    double a = 1.0;      // exponential rate, > 0
    double delta = 0.0;  // exponent offset, in (-1/2, 1/2)

    void validate() const {
        if (!(a > 0.0)) throw domain_error("basis rate a must be positive");
        if (!(delta > -0.5 && delta < 0.5))
            throw domain_error("basis offset delta must lie in (-1/2, 1/2)");
    }

    // Defaults used for the M-fold spectral runs: a = 2M/pi (nearest double),
    // delta = -1/4.
    static BasisSpec for_fold(int M);

    std::string to_kv() const;                       // a=<hex>,delta=<hex>
    static BasisSpec from_kv(const std::string& kv);

    bool operator==(const BasisSpec& o) const { return a == o.a && delta == o.delta; }
};

// Pointwise basis value in double precision, evaluated in log space so that
// n up to 500 and q up to 1e3 neither overflow nor underflow prematurely.
double basis_eval(long n, const BasisSpec& spec, double q);

// Certified pointwise value (used for eigenvector profiles, where huge
// oscillating coefficients demand many digits).
Real basis_eval_r(long n, const BasisSpec& spec, const Real& q, long digits);

// Gram matrix element <psi_m, psi_n>: exactly 1 on the diagonal, otherwise
//   sqrt(B_diag(m+delta+1/2) B_diag(n+delta+1/2)) / B(m+delta+1/2, n+delta+1/2).
// Independent of a.  Certified to relative width 1e-digits.
Real gram_element(long m, long n, double delta, long digits);

}  // namespace backflow
