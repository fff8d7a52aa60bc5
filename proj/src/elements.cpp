#include "backflow/elements.hpp"

#include <cmath>

#include "backflow/gamma.hpp"
#include "backflow/hyp2f1.hpp"

namespace backflow {

namespace {

// radius <= 10^-digits, evaluated in the log domain so that radii far below
// double range are still compared correctly.
bool radius_within(const Complex& v, long digits) {
    long bound = static_cast<long>(std::floor(-static_cast<double>(digits) * 3.3219280949));
    long re = v.re.rad_log2_ceil();
    long im = v.im.rad_log2_ceil();
    return re <= bound && im <= bound;
}

Complex endpoint_term(double s, const Real& mu, const Real& beta, double a, long digits,
                      mpfr_prec_t wp) {
    // z(s) = 2a / (a - is); lies on the circle |z - 1| = 1, off the cut since
    // s != 0.  a and s are exact doubles, so the ball's width is set purely
    // by this division: build it wide enough to survive the incomplete-beta
    // escalation ceiling (otherwise the argument width, not the working
    // precision, would cap the achievable output width).
    mpfr_prec_t wpz = bits_for_digits(4 * (digits + 8) + 40);
    Complex den(Real::of_d(a, wpz), Real::of_d(-s, wpz));
    Complex z = Complex::of_real(Real::of_d(2.0 * a, wpz)) / den;
    Real nu = -beta;
    Complex ib = incomplete_beta(mu, nu, z, digits);
    // phase e^{-i pi sgn(s) (beta+1)}
    Real theta = Real::pi(wp) * (beta + Real::of_si(1, wp));
    if (s > 0) theta = -theta;
    return arg_unit(theta) * ib;
}

}  // namespace

Complex j_eval(double s1, double s2, const Real& alpha, const Real& beta, double a,
               long digits) {
    if (!(a > 0.0)) throw domain_error("interval integral requires a > 0");
    if (s1 == 0.0 || s2 == 0.0)
        throw domain_error("interval endpoints must be nonzero (z = 2 sits on the cut)");
    if (!(s1 < s2)) throw domain_error("interval endpoints must satisfy s1 < s2");
    if (!alpha.is_exact() || !beta.is_exact())
        throw domain_error("interval integral exponents must be exact");

    long d = digits + 20;
    for (int attempt = 0; attempt < 3; ++attempt, d *= 2) {
        mpfr_prec_t wp = bits_for_digits(d);
        Real al = alpha + Real(wp);  // promote exactly
        Real be = beta + Real(wp);
        Real mu = al + be + Real::of_si(1, wp);
        if (!mu.certainly_positive())
            throw domain_error("interval integral requires alpha + beta > -1");
        Real pref = pow(Real::of_d(2.0 * a, wp), -mu);
        Complex bracket =
            endpoint_term(s2, mu, be, a, d, wp) - endpoint_term(s1, mu, be, a, d, wp);
        // J+ = -i (2a)^{-mu} [bracket]
        Complex j = Complex(bracket.im, -bracket.re);
        j = mul(j, pref);
        if (s1 < 0.0 && 0.0 < s2) {
            Real g = gamma_v(mu, d) / (gamma_v(al + Real::of_si(1, wp), d) *
                                       gamma_v(be + Real::of_si(1, wp), d));
            j += Complex::of_real(mul_si(Real::pi(wp), 2) * pref * g);
        }
        // Accept on a relative-width criterion (the caller rescales by the
        // coupling coefficients, so J itself is checked relatively).
        Real scale = j.abs_upper(64) + Real::of_si(1, 64);
        Real budget = scale / pow_si(Real::of_si(10, 64), digits);
        Real rad = j.rad_upper(64);
        if (!(rad - budget).certainly_positive()) return j;
    }
    throw precision_error("interval integral: requested width unachievable");
}

Real element_coeff(long first, long second, const BasisSpec& spec, long digits) {
    spec.validate();
    if (first < 0 || second < 0) throw domain_error("element indices must be >= 0");
    long d = digits + 10;
    mpfr_prec_t wp = bits_for_digits(d);
    Real half = Real::of_d(0.5, wp);
    Real del = Real::of_d(spec.delta, wp);
    Real x = Real::of_si(first, wp) + del + half;   // first index + delta + 1/2
    Real y = Real::of_si(second, wp) + del + half;  // second index + delta + 1/2
    Real expo = Real::of_si(first + second + 1, wp) + mul_si(del, 2);
    Real num = Real::pi(wp) * sqrt(Real::of_si(2, wp)) *
               pow(Real::of_d(2.0 * spec.a, wp), expo) *
               sqrt(beta_diag_v(x, d) * beta_diag_v(y, d));
    Real den = beta_v(x, Real::of_d(0.75, wp), d) * beta_v(y, Real::of_d(0.25, wp), d);
    return num / den;
}

Complex mfold_element(long m, long n, const TimeGrid& grid, const BasisSpec& spec,
                      long digits) {
    spec.validate();
    if (m < 0 || n < 0) throw domain_error("element indices must be >= 0");
    if (digits < 1) throw domain_error("requested digits must be >= 1");
    long d = digits + 20;
    for (int attempt = 0; attempt < 3; ++attempt, d += d / 2) {
        mpfr_prec_t wp = bits_for_digits(d);
        Real del = Real::of_d(spec.delta, wp);
        Real quarter = Real::of_d(0.25, wp);
        Real am_p = Real::of_si(m, wp) + del + quarter;  // alpha_m^+
        Real am_m = Real::of_si(m, wp) + del - quarter;  // alpha_m^-
        Real an_p = Real::of_si(n, wp) + del + quarter;
        Real an_m = Real::of_si(n, wp) + del - quarter;
        Real dmn = element_coeff(m, n, spec, d);
        Real dnm = element_coeff(n, m, spec, d);
        Complex acc(wp);
        const std::vector<double>& ts = grid.times();
        for (size_t k = 0; k + 1 < ts.size(); k += 2) {
            acc += mul(j_eval(ts[k], ts[k + 1], am_p, an_m, spec.a, d), dmn);
            acc += mul(j_eval(ts[k], ts[k + 1], am_m, an_p, spec.a, d), dnm);
        }
        Real minus_inv4pi = Real::of_si(-1, wp) / mul_si(Real::pi(wp), 4);
        Complex out = mul(acc, minus_inv4pi);
        if (radius_within(out, digits)) return out;
    }
    throw precision_error("matrix element: requested radius unachievable");
}

}  // namespace backflow
