#pragma once

#include <mpfr.h>

#include "backflow/errors.hpp"

namespace backflow {

// Decimal digits -> MPFR bits with a fixed safety margin.
inline mpfr_prec_t bits_for_digits(long digits) {
    // log2(10) = 3.3219...; +16 guard bits.
    return static_cast<mpfr_prec_t>(digits * 3.3220 + 17);
}

// Working precisions for a dimension-(N+1) run.  element_digits feeds the
// certified matrix-element evaluation, solver_digits the plain floating
// eigensolver; target_radius_log10 is the per-element certified radius goal
// (radius <= 10^target_radius_log10).
struct PrecisionPolicy {
    long element_digits = 0;
    long solver_digits = 0;
    long target_radius_log10 = 0;

    static PrecisionPolicy for_dimension(long N) {
        PrecisionPolicy p;
        p.element_digits = N + 30;
        p.solver_digits = N + 20;
        if (p.element_digits < 30) p.element_digits = 30;
        if (p.solver_digits < 30) p.solver_digits = 30;
        p.target_radius_log10 = -p.element_digits;
        return p;
    }

    void validate() const {
        if (solver_digits < 30 || element_digits < solver_digits)
            throw domain_error("precision policy requires element_digits >= solver_digits >= 30");
    }
};

}  // namespace backflow
