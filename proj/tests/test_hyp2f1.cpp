#include <cmath>

#include "backflow/errors.hpp"
#include "backflow/gamma.hpp"
#include "backflow/hyp2f1.hpp"
#include "backflow/prec.hpp"
#include "test_main.hpp"

using namespace backflow;

namespace {

Real ref_ball(const char* s, long err_exp2) {
    Real r = Real::of_str(s, 400);
    r.add_error_2exp(err_exp2);
    return r;
}

Complex ref_cball(const char* re, const char* im, long err_exp2) {
    return Complex(ref_ball(re, err_exp2), ref_ball(im, err_exp2));
}

bool cball_contains(const Complex& outer, const Complex& inner) {
    return outer.re.contains(inner.re) && outer.im.contains(inner.im);
}

// Independent oracle: plain Taylor summation of the Gauss series in ball
// arithmetic, valid for |z| safely below 1.  Shares nothing with the
// production evaluator except the ball types.
Complex taylor_oracle(double a, double b, double c, const Complex& z, int terms) {
    mpfr_prec_t p = 320;
    Complex sum = Complex::of_d(1, 0, p);
    Complex term = Complex::of_d(1, 0, p);
    for (int n = 0; n < terms; ++n) {
        Real factor = Real::of_d(a + n, p) * Real::of_d(b + n, p) /
                      (Real::of_d(c + n, p) * Real::of_d(1.0 + n, p));
        term = mul(term * z, factor);
        sum = sum + term;
    }
    // geometric tail bound: |term| * q / (1 - q) with q an upper bound of the
    // ratio |z| (a+n)(b+n)/((c+n)(1+n)) -> |z|, padded for the prefactors
    double q = 0.95;
    Real tail = term.abs_upper(64) * Real::of_d(q / (1 - q), 64);
    sum.add_error(tail);
    return sum;
}

}  // namespace

TEST_CASE("series terminates at z = 0") {
    Complex one = hyp2f1(Real::of_ratio(3, 2, 64), Real::of_ratio(3, 4, 64),
                         Real::of_ratio(5, 2, 64), Complex::of_d(0, 0, 64), 30);
    CHECK(one.re.contains(Real::of_si(1, 64)));
    CHECK(one.im.contains_zero());
}

TEST_CASE("classic closed form: F(1,1;2;1/2) = 2 ln 2") {
    Complex f = hyp2f1(Real::of_si(1, 64), Real::of_si(1, 64), Real::of_si(2, 64),
                       Complex::of_d(0.5, 0.0, 64), 35);
    CHECK(ref_ball("1.386294361119890618834464242916353136151", -110).contains(f.re));
    CHECK(f.im.contains_zero());
}

TEST_CASE("agrees with an independent Taylor oracle inside the disk") {
    Real a = Real::of_ratio(3, 2, 128), b = Real::of_ratio(3, 4, 128),
         c = Real::of_ratio(5, 2, 128);
    Complex z = Complex::of_d(0.3, 0.4, 128);
    Complex lib = hyp2f1(a, b, c, z, 30);
    Complex orc = taylor_oracle(1.5, 0.75, 2.5, z, 400);
    CHECK(lib.re.overlaps(orc.re));
    CHECK(lib.im.overlaps(orc.im));
    CHECK(cball_contains(
        ref_cball("1.085323359419386023195704353973737805421",
                  "0.2467474262665713939690543631303303650159", -100),
        lib));
}

TEST_CASE("matrix-element argument on the circle |z - 1| = 1") {
    // z(s) = 2a/(a - is) for a = 2/pi: s = 1 lands slightly outside the unit
    // disk, s = 2 inside.  Frozen references from an independent evaluation.
    mpfr_prec_t p = 256;
    Real a = Real::of_ratio(3, 2, p), b = Real::of_ratio(3, 4, p), c = Real::of_ratio(5, 2, p);
    double ad = 2.0 / 3.14159265358979323846;
    auto zs = [&](double s) {
        // 2a/(a - is) computed in ball arithmetic from exact doubles
        Complex den = Complex(Real::of_d(ad, p), Real::of_d(-s, p));
        return Complex(Real::of_d(2 * ad, p), Real::of_si(0, p)) / den;
    };
    Complex f1 = hyp2f1(a, b, c, zs(1.0), 30);
    CHECK(cball_contains(ref_cball("0.9248390566275371764805987019697494165895",
                                   "0.5187827416496777169167008131688790557327", -90),
                         f1));
    Complex f2 = hyp2f1(a, b, c, zs(2.0), 30);
    CHECK(cball_contains(ref_cball("0.9783899590378242241713664930382605090372",
                                   "0.2787033800981767277207231828801635132525", -90),
                         f2));
    // the Taylor oracle independently confirms the inside-disk value
    Complex orc = taylor_oracle(1.5, 0.75, 2.5, zs(2.0), 700);
    CHECK(f2.re.overlaps(orc.re));
    CHECK(f2.im.overlaps(orc.im));
}

TEST_CASE("Pfaff transformation consistency") {
    // F(a,b;c;z) = (1-z)^(-a) F(a, c-b; c; z/(z-1))
    mpfr_prec_t p = 192;
    Real a = Real::of_ratio(3, 2, p), b = Real::of_ratio(3, 4, p), c = Real::of_ratio(5, 2, p);
    Complex z = Complex::of_d(0.25, 0.35, p);
    Complex lhs = hyp2f1(a, b, c, z, 30);
    Complex one = Complex::of_d(1, 0, p);
    Complex w = z / (z - one);
    Complex pref = pow(one - z, -a);
    Complex rhs = pref * hyp2f1(a, c - b, c, w, 30);
    CHECK(lhs.re.overlaps(rhs.re));
    CHECK(lhs.im.overlaps(rhs.im));
}

TEST_CASE("symmetry in the upper parameters") {
    mpfr_prec_t p = 128;
    Complex z = Complex::of_d(-0.4, 0.2, p);
    Complex f1 = hyp2f1(Real::of_ratio(3, 2, p), Real::of_ratio(3, 4, p), Real::of_ratio(5, 2, p),
                        z, 30);
    Complex f2 = hyp2f1(Real::of_ratio(3, 4, p), Real::of_ratio(3, 2, p), Real::of_ratio(5, 2, p),
                        z, 30);
    CHECK(f1.re.overlaps(f2.re));
    CHECK(f1.im.overlaps(f2.im));
}

TEST_CASE("requested accuracy is certified") {
    for (long digits : {20L, 60L, 150L}) {
        Complex f = hyp2f1(Real::of_ratio(3, 2, 700), Real::of_ratio(3, 4, 700),
                           Real::of_ratio(5, 2, 700), Complex::of_d(0.3, 0.4, 700), digits);
        double bound = (std::hypot(f.re.mid_d(), f.im.mid_d()) + 1.0) * std::pow(10.0, -digits);
        CHECK(f.re.rad_d() <= bound * 1.5);
        CHECK(f.im.rad_d() <= bound * 1.5);
    }
}

TEST_CASE("branch cut [1, inf) is refused") {
    Real a = Real::of_ratio(3, 2, 64), b = Real::of_ratio(3, 4, 64), c = Real::of_ratio(5, 2, 64);
    CHECK_THROWS_AS((void)hyp2f1(a, b, c, Complex::of_d(1.5, 0.0, 64), 20), branch_error);
    CHECK_THROWS_AS((void)hyp2f1(a, b, c, Complex::of_d(1.0, 0.0, 64), 20), branch_error);
    // a box that dips onto the cut is refused even with a complex midpoint
    Complex near_cut = Complex::of_d(1.5, 1e-30, 64);
    near_cut.add_error(Real::of_d(1e-20, 64));
    CHECK_THROWS_AS((void)hyp2f1(a, b, c, near_cut, 20), branch_error);
}

TEST_CASE("inexact parameters are refused") {
    Real a = Real::of_str("1.5", 64);  // carries a radius
    CHECK_THROWS_AS((void)hyp2f1(a, Real::of_ratio(3, 4, 64), Real::of_ratio(5, 2, 64),
                                 Complex::of_d(0.3, 0.0, 64), 20),
                    domain_error);
}
