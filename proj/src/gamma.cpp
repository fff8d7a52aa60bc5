#include "backflow/gamma.hpp"

#include <mpfr.h>

#include <string>

namespace backflow {

namespace {

struct Tmp {
    mpfr_t v;
    explicit Tmp(mpfr_prec_t p) { mpfr_init2(v, p); }
    ~Tmp() { mpfr_clear(v); }
    Tmp(const Tmp&) = delete;
    Tmp& operator=(const Tmp&) = delete;
};

// The Gamma function on (0, inf) has a single interior minimum at
// x* = 1.46163 2144 9683 62...  with Gamma(x*) = 0.88560 3194 4108 88...
// The doubles below bracket x* and under-estimate the minimum value, which
// is all the monotonicity argument needs.
constexpr double kCritLo = 1.46163;
constexpr double kCritHi = 1.46164;
constexpr double kGammaMin = 0.8856;

// Gamma over an interval that lies entirely in (0, inf).
Real gamma_positive(mpfr_srcptr lo, mpfr_srcptr hi, mpfr_prec_t wp) {
    Tmp a(wp), b(wp);
    if (mpfr_cmp_d(hi, kCritLo) <= 0) {
        // Decreasing branch.
        mpfr_gamma(a.v, hi, MPFR_RNDD);
        mpfr_gamma(b.v, lo, MPFR_RNDU);
    } else if (mpfr_cmp_d(lo, kCritHi) >= 0) {
        // Increasing branch.
        mpfr_gamma(a.v, lo, MPFR_RNDD);
        mpfr_gamma(b.v, hi, MPFR_RNDU);
    } else {
        // Interval straddles the critical-point enclosure: the max is at an
        // endpoint, the min is bounded by the global minimum on (0, inf).
        Tmp c(wp);
        mpfr_gamma(b.v, lo, MPFR_RNDU);
        mpfr_gamma(c.v, hi, MPFR_RNDU);
        if (mpfr_cmp(c.v, b.v) > 0) mpfr_set(b.v, c.v, MPFR_RNDU);
        mpfr_set_d(a.v, kGammaMin, MPFR_RNDD);
    }
    return Real::of_interval(a.v, b.v, wp);
}

}  // namespace

Real gamma_ball(const Real& x, mpfr_prec_t wp) {
    Tmp lo(wp), hi(wp);
    x.lower(lo.v);
    x.upper(hi.v);

    if (mpfr_sgn(lo.v) > 0) return gamma_positive(lo.v, hi.v, wp);

    // Nonpositive territory: reject intervals touching a pole (any integer
    // <= 0, including 0 itself), then raise the argument into (0, inf) with
    // Gamma(x) = Gamma(x + m) / [x (x+1) ... (x+m-1)].
    if (!mpfr_number_p(lo.v) || mpfr_cmp_si(lo.v, -4096) < 0)
        throw domain_error("gamma: argument too negative or not finite");
    Tmp fl(wp), ce(wp);
    mpfr_floor(fl.v, hi.v);
    mpfr_ceil(ce.v, lo.v);
    // Contained integers are exactly [ceil(lo), floor(hi)]; any of them <= 0
    // (0 included, so intervals reaching across the origin are caught too).
    if (mpfr_cmp(ce.v, fl.v) <= 0 && mpfr_sgn(ce.v) <= 0)
        throw domain_error("gamma: argument interval touches a nonpositive integer pole");

    // m = smallest integer with lo + m >= 1.
    Tmp sh(wp);
    mpfr_si_sub(sh.v, 1, lo.v, MPFR_RNDU);
    mpfr_ceil(sh.v, sh.v);
    long m = mpfr_get_si(sh.v, MPFR_RNDN);
    if (m < 1) m = 1;

    Real xw = x + Real(wp);  // adding an exact zero ball promotes precision
    Real shifted = add_si(xw, m);
    Tmp slo(wp), shi(wp);
    shifted.lower(slo.v);
    shifted.upper(shi.v);
    if (mpfr_sgn(slo.v) <= 0)
        throw domain_error("gamma: shifted argument not positive");
    Real g = gamma_positive(slo.v, shi.v, wp);

    Real prod = xw;
    for (long j = 1; j < m; ++j) prod = prod * add_si(xw, j);
    return g / prod;
}

Real gamma_v(const Real& x, long digits) {
    if (digits < 1) digits = 1;
    const mpfr_prec_t wp0 = bits_for_digits(digits) + 16;
    for (int k = 0; k < 5; ++k) {
        Real r = gamma_ball(x, wp0 << k);
        if (rel_width_ok(r, digits)) return r;
    }
    throw precision_error("gamma: requested relative width unachievable (argument interval too wide?)");
}

Real beta_v(const Real& x, const Real& y, long digits) {
    if (digits < 1) digits = 1;
    const mpfr_prec_t wp0 = bits_for_digits(digits) + 24;
    for (int k = 0; k < 5; ++k) {
        const mpfr_prec_t wp = wp0 << k;
        Real r = gamma_ball(x, wp) * gamma_ball(y, wp) / gamma_ball(x + y, wp);
        if (rel_width_ok(r, digits)) return r;
    }
    throw precision_error("beta: requested relative width unachievable");
}

Real beta_diag_v(const Real& x, long digits) {
    if (digits < 1) digits = 1;
    const mpfr_prec_t wp0 = bits_for_digits(digits) + 24;
    for (int k = 0; k < 5; ++k) {
        const mpfr_prec_t wp = wp0 << k;
        Real g = gamma_ball(x, wp);
        Real r = sqr(g) / gamma_ball(mul_si(x, 2), wp);
        if (rel_width_ok(r, digits)) return r;
    }
    throw precision_error("beta_diag: requested relative width unachievable");
}

bool rel_width_ok(const Real& x, long digits) {
    if (x.is_exact()) return true;
    if (mpfr_zero_p(x.mid())) return false;
    const long need = static_cast<long>(static_cast<double>(digits) * 3.3220) + 2;
    return mpfr_get_exp(x.rad()) <= mpfr_get_exp(x.mid()) - need;
}

}  // namespace backflow
