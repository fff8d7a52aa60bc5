// Tests for the certified interval integrals, the coupling coefficients, and
// the assembled matrix elements.  References were frozen from independent
// high-precision quadrature of the defining integrals; the assembled elements
// are additionally cross-checked against the double-precision quadrature
// oracle, which shares no code with the closed-form route.
#include "test_main.hpp"

#include <complex>
#include <utility>
#include <vector>

#include "backflow/elements.hpp"
#include "backflow/gamma.hpp"
#include "backflow/oracle.hpp"
#include "backflow/prec.hpp"

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

bool cball_overlaps(const Complex& x, const Complex& y) {
    return x.re.overlaps(y.re) && x.im.overlaps(y.im);
}

}  // namespace

TEST_CASE("interval integral matches frozen quadrature references") {
    // All endpoints and rates below are exact binary doubles; the references
    // were computed for exactly those values.
    const Real quarter = Real::of_ratio(1, 4, 256);
    const Real mquarter = Real::of_ratio(-1, 4, 256);
    const Real threeq = Real::of_ratio(3, 4, 256);

    // Positive interval, asymmetric exponents, complex value.
    Complex j12 = j_eval(1.0, 2.0, quarter, mquarter, 1.0, 40);
    CHECK(cball_contains(ref_cball("0.28609535950808766859441820163496",
                                   "0.14645744831849364789328538466755", -104),
                         j12));

    // Zero-straddling interval with equal exponents: value is real.
    Complex j25 = j_eval(-2.5, 2.5, threeq, threeq, 0.8, 40);
    CHECK(j25.im.contains_zero());
    CHECK(ref_ball("2.9800869020214766960075919176172", -104).contains(j25.re));

    // Wide straddling interval approaches the full-line value from below.
    Complex j60 = j_eval(-60.0, 60.0, threeq, threeq, 0.8, 40);
    CHECK(ref_ball("3.0536686767724067253437691936158", -104).contains(j60.re));
    CHECK(j25.re.upper_d() < j60.re.lower_d());
}

TEST_CASE("wide intervals stay below the full-line gamma value") {
    // For equal exponents the integrand is positive, so the integral over any
    // finite interval is strictly below the full-line value
    //   2 pi (2a)^(-alpha-beta-1) Gamma(alpha+beta+1) /
    //     (Gamma(alpha+1) Gamma(beta+1)),
    // computed here directly from the gamma function.
    const long w = bits_for_digits(80);
    Real twoa = Real::of_d(1.6, w);  // exactly twice the double 0.8
    Real full = (Real::pi(w) * Real::of_si(2, w)) *
                pow(twoa, Real::of_ratio(-5, 2, w)) *
                gamma_v(Real::of_ratio(5, 2, w), 60) /
                (gamma_v(Real::of_ratio(7, 4, w), 60) *
                 gamma_v(Real::of_ratio(7, 4, w), 60));
    CHECK(ref_ball("3.053697360580221118222055972398", -104).contains(full));

    const Real threeq = Real::of_ratio(3, 4, 256);
    Complex j60 = j_eval(-60.0, 60.0, threeq, threeq, 0.8, 40);
    CHECK(j60.re.upper_d() < full.lower_d());
    // The remaining tail is O(s^{-5/2}); at s = 60 it is below 3.2e-5.
    CHECK(full.upper_d() - j60.re.lower_d() < 3.2e-5);
}

TEST_CASE("interval integral is additive across subdivision") {
    const Real quarter = Real::of_ratio(1, 4, 256);
    const Real mquarter = Real::of_ratio(-1, 4, 256);
    const Real threeq = Real::of_ratio(3, 4, 256);

    // Split inside a positive interval.
    Complex whole = j_eval(1.0, 2.0, quarter, mquarter, 1.0, 35);
    Complex left = j_eval(1.0, 1.3, quarter, mquarter, 1.0, 35);
    Complex right = j_eval(1.3, 2.0, quarter, mquarter, 1.0, 35);
    CHECK(cball_overlaps(whole, left + right));

    // Split of a straddling interval at a negative point: the right part
    // still straddles zero, so this exercises both evaluation branches.
    Complex swhole = j_eval(-2.5, 2.5, threeq, threeq, 0.8, 35);
    Complex sleft = j_eval(-2.5, -0.7, threeq, threeq, 0.8, 35);
    Complex sright = j_eval(-0.7, 2.5, threeq, threeq, 0.8, 35);
    CHECK(cball_overlaps(swhole, sleft + sright));
}

TEST_CASE("swapping the exponents conjugates the interval integral") {
    const Real quarter = Real::of_ratio(1, 4, 256);
    const Real mquarter = Real::of_ratio(-1, 4, 256);
    Complex ab = j_eval(1.0, 2.0, quarter, mquarter, 1.0, 35);
    Complex ba = j_eval(1.0, 2.0, mquarter, quarter, 1.0, 35);
    CHECK(cball_overlaps(ab, conj(ba)));
}

TEST_CASE("interval integral rejects invalid arguments") {
    const Real q = Real::of_ratio(1, 4, 256);
    CHECK_THROWS_AS(j_eval(1.0, 1.0, q, q, 1.0, 30), domain_error);
    CHECK_THROWS_AS(j_eval(2.0, 1.0, q, q, 1.0, 30), domain_error);
    CHECK_THROWS_AS(j_eval(0.0, 1.0, q, q, 1.0, 30), domain_error);
    CHECK_THROWS_AS(j_eval(-1.0, 0.0, q, q, 1.0, 30), domain_error);
    CHECK_THROWS_AS(j_eval(1.0, 2.0, q, q, 0.0, 30), domain_error);
    CHECK_THROWS_AS(j_eval(1.0, 2.0, q, q, -0.5, 30), domain_error);
    // Exponents must be exact; a parsed decimal ball is not.
    Real inexact = Real::of_str("0.25", 128);
    CHECK_THROWS_AS(j_eval(1.0, 2.0, inexact, q, 1.0, 30), domain_error);
    // alpha + beta must exceed -1.
    Real mh = Real::of_ratio(-1, 2, 256);
    CHECK_THROWS_AS(j_eval(1.0, 2.0, mh, mh, 1.0, 30), domain_error);
}

TEST_CASE("coupling coefficient matches a direct gamma-function build") {
    BasisSpec spec = BasisSpec::for_fold(1);
    const long w = bits_for_digits(60);
    const long dg = 50;
    // Direct reconstruction from beta functions at independent precision:
    //   pi sqrt(2) (2a)^(f+s+2 delta+1)
    //     sqrt(B_diag(f+delta+1/2) B_diag(s+delta+1/2))
    //     / ( B(f+delta+1/2, 3/4) B(s+delta+1/2, 1/4) ).
    auto direct = [&](long f, long s) {
        Real fq = Real::of_ratio(4 * f + 1, 4, w);   // f + delta + 1/2, delta = -1/4
        Real sq = Real::of_ratio(4 * s + 1, 4, w);
        Real twoa = Real::of_d(2.0 * spec.a, w);
        Real expo = Real::of_ratio(2 * (f + s) + 1, 2, w);  // f+s+2 delta+1
        Real num = Real::pi(w) * sqrt(Real::of_si(2, w)) * pow(twoa, expo) *
                   sqrt(beta_diag_v(fq, dg) * beta_diag_v(sq, dg));
        Real den = beta_v(fq, Real::of_ratio(3, 4, w), dg) *
                   beta_v(sq, Real::of_ratio(1, 4, w), dg);
        return num / den;
    };
    for (auto [f, s] : {std::pair<long, long>{0, 0}, {0, 1}, {1, 0}, {2, 3}}) {
        Real lib = element_coeff(f, s, spec, 40);
        Real ref = direct(f, s);
        CHECK(lib.overlaps(ref));
    }
}

TEST_CASE("coupling coefficient is asymmetric with exact ratio 1/2") {
    // For delta = -1/4 the beta-function factors reduce so that
    // D(0,1)/D(1,0) = 1/2 exactly, independent of the rate a.  This pins the
    // orientation: the first index pairs with 3/4, the second with 1/4.
    for (int fold : {1, 2, 3}) {
        BasisSpec spec = BasisSpec::for_fold(fold);
        Real d01 = element_coeff(0, 1, spec, 40);
        Real d10 = element_coeff(1, 0, spec, 40);
        Real ratio = d01 / d10;
        CHECK(ratio.contains(Real::of_ratio(1, 2, 256)));
        CHECK(!ratio.contains(Real::of_si(1, 256)));  // genuinely asymmetric
    }
}

TEST_CASE("matrix elements match frozen references with certified radius") {
    TimeGrid grid = equal_spacing_grid(1, 1.0);
    BasisSpec spec = BasisSpec::for_fold(1);
    struct Ref {
        long m, n;
        const char* re;
    };
    const Ref refs[] = {
        {0, 0, "-3.05826798500249861245855094739264e-01"},
        {0, 1, "-4.45661397955860043551624608822335e-01"},
        {2, 1, "-7.24513241840253320183582519458509e-01"},
        {3, 3, "-9.17134705591144702815307734663251e-01"},
    };
    for (const Ref& r : refs) {
        Complex e = mfold_element(r.m, r.n, grid, spec, 40);
        CHECK(ref_ball(r.re, -104).contains(e.re));
        // Symmetric grid: the element is real within the certified radius.
        CHECK(e.im.contains_zero());
        CHECK(e.re.rad_d() <= 1e-40);
        CHECK(e.im.rad_d() <= 1e-40);
    }
}

TEST_CASE("asymmetric grids give complex Hermitian elements") {
    TimeGrid grid({0.5, 1.0, 3.0, 7.0});
    BasisSpec spec = BasisSpec::for_fold(2);
    Complex e01 = mfold_element(0, 1, grid, spec, 40);
    CHECK(cball_contains(ref_cball("-8.60250813851134001246357989769987e-02",
                                   "9.58279925649663302980707993038890e-02", -104),
                         e01));
    Complex e03 = mfold_element(0, 3, grid, spec, 40);
    CHECK(cball_contains(ref_cball("1.26484502134602568916495725039127e-02",
                                   "1.01974848317682805170022448895418e-01", -104),
                         e03));
    // Hermiticity: the (1,0) entry is the conjugate of (0,1).
    Complex e10 = mfold_element(1, 0, grid, spec, 40);
    CHECK(cball_overlaps(e10, conj(e01)));
    CHECK(e01.im.certainly_positive());  // genuinely complex off the symmetric case
}

TEST_CASE("closed form agrees with the independent quadrature oracle") {
    // Single-interval case.
    {
        TimeGrid grid = equal_spacing_grid(1, 1.0);
        BasisSpec spec = BasisSpec::for_fold(1);
        for (long m = 0; m <= 4; ++m) {
            for (long n = m; n <= 4; ++n) {
                Complex e = mfold_element(m, n, grid, spec, 30);
                double err = 0.0;
                std::complex<double> q = quadrature_oracle(m, n, grid, spec, 2e-9, &err);
                std::complex<double> c(e.re.mid_d(), e.im.mid_d());
                CHECK(std::abs(c - q) <= 1e-8);
                CHECK(err <= 1e-7);
            }
        }
    }
    // Two-interval case at the doubled fold.
    {
        TimeGrid grid = equal_spacing_grid(2, 1.0);
        BasisSpec spec = BasisSpec::for_fold(2);
        for (auto [m, n] : {std::pair<long, long>{0, 0}, {0, 2}, {1, 3}, {2, 3}, {4, 4}}) {
            Complex e = mfold_element(m, n, grid, spec, 30);
            std::complex<double> q = quadrature_oracle(m, n, grid, spec, 2e-9);
            std::complex<double> c(e.re.mid_d(), e.im.mid_d());
            CHECK(std::abs(c - q) <= 1e-8);
        }
    }
}

TEST_CASE("precision-policy overload matches the explicit digit count") {
    TimeGrid grid = equal_spacing_grid(1, 1.0);
    BasisSpec spec = BasisSpec::for_fold(1);
    PrecisionPolicy policy = PrecisionPolicy::for_dimension(13);
    REQUIRE(policy.target_radius_log10 == -43);
    Complex a = mfold_element(0, 1, grid, spec, policy);
    Complex b = mfold_element(0, 1, grid, spec, 43);
    CHECK(a.re.mid_string(40) == b.re.mid_string(40));
    CHECK(a.re.rad_log2_ceil() == b.re.rad_log2_ceil());
    CHECK(a.im.rad_log2_ceil() == b.im.rad_log2_ceil());
}
