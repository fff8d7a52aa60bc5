#include "backflow/complex.hpp"

#include <cmath>

namespace backflow {

double Complex::rad_d() const {
    return re.rad_d() + im.rad_d();  // 1-norm dominates the Euclidean radius
}

Real Complex::rad_upper(mpfr_prec_t prec) const {
    Real rr(prec), ri(prec);
    mpfr_set(rr.mid_rw(), re.rad(), MPFR_RNDU);
    mpfr_set(ri.mid_rw(), im.rad(), MPFR_RNDU);
    return rr + ri;
}

Real Complex::abs_upper(mpfr_prec_t prec) const {
    Real hr(prec), hi(prec);
    mpfr_t t;
    mpfr_init2(t, prec);
    mpfr_abs(t, re.mid(), MPFR_RNDU);
    mpfr_add(t, t, re.rad(), MPFR_RNDU);
    mpfr_set(hr.mid_rw(), t, MPFR_RNDU);
    mpfr_abs(t, im.mid(), MPFR_RNDU);
    mpfr_add(t, t, im.rad(), MPFR_RNDU);
    mpfr_set(hi.mid_rw(), t, MPFR_RNDU);
    mpfr_clear(t);
    Real s = sqrt(sqr(hr) + sqr(hi));
    Real up(prec);
    s.upper(up.mid_rw());
    return up;
}

Real Complex::abs_lower(mpfr_prec_t prec) const {
    // inf |z| over the box: per-axis distance to 0, clamped at 0.
    auto axis_low = [&](const Real& c) {
        mpfr_t t;
        mpfr_init2(t, prec);
        mpfr_abs(t, c.mid(), MPFR_RNDD);
        mpfr_sub(t, t, c.rad(), MPFR_RNDD);
        Real r(prec);
        if (mpfr_sgn(t) > 0) mpfr_set(r.mid_rw(), t, MPFR_RNDD);
        mpfr_clear(t);
        return r;
    };
    Real lr = axis_low(re), li = axis_low(im);
    Real s = sqrt(sqr(lr) + sqr(li));
    Real down(prec);
    s.lower(down.mid_rw());
    if (mpfr_sgn(down.mid()) < 0) mpfr_set_zero(down.mid_rw(), 1);
    return down;
}

void Complex::add_error(const Real& bound) {
    re.add_error(bound);
    im.add_error(bound);
}

Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
Complex conj(const Complex& a) { return {a.re, -a.im}; }

Complex operator*(const Complex& a, const Complex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

Complex operator/(const Complex& a, const Complex& b) {
    Real d = abs_sq(b);
    Complex n = a * conj(b);
    return {n.re / d, n.im / d};
}

Complex mul(const Complex& a, const Real& s) { return {a.re * s, a.im * s}; }
Complex mul_si(const Complex& a, long b) { return {mul_si(a.re, b), mul_si(a.im, b)}; }
Complex div_si(const Complex& a, long b) { return {div_si(a.re, b), div_si(a.im, b)}; }

Real abs_sq(const Complex& a) { return sqr(a.re) + sqr(a.im); }

Complex exp(const Complex& z) {
    Real m = exp(z.re);
    return {m * cos(z.im), m * sin(z.im)};
}

Complex arg_unit(const Real& theta) { return {cos(theta), sin(theta)}; }

Complex log_principal(const Complex& z) {
    // Principal argument from monotone atan on a half-plane, choosing the
    // half-plane by which coordinate is certainly signed.  Boxes touching the
    // branch cut (-inf, 0] are rejected.
    mpfr_prec_t p = z.prec();
    Real half_log = div_si(log(abs_sq(z)), 2);
    Real arg(p);
    if (z.re.certainly_positive()) {
        arg = atan(z.im / z.re);
    } else if (z.im.certainly_positive()) {
        // arg = pi/2 - atan(re/im), valid for im > 0
        arg = div_si(Real::pi(p), 2) - atan(z.re / z.im);
    } else if (z.im.certainly_negative()) {
        // arg = -pi/2 - atan(re/im) with im < 0 (atan of re/|im| sign-flipped)
        arg = -div_si(Real::pi(p), 2) - atan(z.re / z.im);
    } else {
        throw branch_error("complex log: argument box touches the cut (-inf, 0]");
    }
    return {std::move(half_log), std::move(arg)};
}

Complex pow(const Complex& z, const Real& expo) {
    if (!expo.is_exact()) throw domain_error("complex pow requires an exact exponent");
    return exp(mul(log_principal(z), expo));
}

}  // namespace backflow
