#include "backflow/errors.hpp"
#include "backflow/gamma.hpp"
#include "backflow/prec.hpp"
#include "test_main.hpp"

using namespace backflow;

namespace {

Real ref_ball(const char* s, long err_exp2) {
    Real r = Real::of_str(s, 400);
    r.add_error_2exp(err_exp2);
    return r;
}

}  // namespace

TEST_CASE("gamma at 1/2 is sqrt(pi)") {
    Real g = gamma_v(Real::of_ratio(1, 2, 256), 50);
    Real sp = sqrt(Real::pi(300));
    CHECK(g.overlaps(sp));
    CHECK(rel_width_ok(g, 50));
}

TEST_CASE("gamma on the positive half-integers matches the closed form") {
    // Gamma(7/2) = 15/8 sqrt(pi)
    Real g = gamma_v(Real::of_ratio(7, 2, 256), 45);
    CHECK(ref_ball("3.32335097044784255118406403126464721774540523022947586540089", -140)
              .contains(g));
    // recurrence: Gamma(x+1) = x Gamma(x) at x = 3/4
    Real x = Real::of_ratio(3, 4, 256);
    Real lhs = gamma_v(add_si(x, 1), 45);
    Real rhs = x * gamma_v(x, 45);
    CHECK(lhs.overlaps(rhs));
}

TEST_CASE("gamma extends to negative non-integers") {
    Real g = gamma_v(Real::of_ratio(-1, 4, 256), 48);
    CHECK(ref_ball("-4.90166680986071058051639321345156210740495699243228244492048", -140)
              .contains(g));
    CHECK(g.certainly_negative());
}

TEST_CASE("gamma poles raise domain_error") {
    CHECK_THROWS_AS((void)gamma_v(Real::of_si(0, 64), 30), domain_error);
    CHECK_THROWS_AS((void)gamma_v(Real::of_si(-2, 64), 30), domain_error);
    // an interval that straddles a pole is just as inadmissible
    Real straddle = Real::of_si(-1, 64);
    straddle.add_error_2exp(-3);
    CHECK_THROWS_AS((void)gamma_v(straddle, 30), domain_error);
}

TEST_CASE("beta diagonal value used by the normalization constants") {
    Real b = beta_diag_v(Real::of_ratio(1, 4, 256), 48);
    CHECK(ref_ball("7.41629870920548767373540138878104018487039529408706762234371", -140)
              .contains(b));
    Real b34 = beta_diag_v(Real::of_ratio(3, 4, 256), 48);
    CHECK(ref_ball("1.69442616958795817321299824696438327296289182065388437012116", -140)
              .contains(b34));
}

TEST_CASE("beta against an independent gamma ratio at doubled precision") {
    Real x = Real::of_ratio(1, 4, 320);
    Real y = Real::of_ratio(5, 4, 320);
    Real b = beta_v(x, y, 40);
    // direct ratio at twice the digit budget
    Real num = gamma_v(x, 80) * gamma_v(y, 80);
    Real den = gamma_v(x + y, 80);
    CHECK(b.overlaps(num / den));
    CHECK(ref_ball("3.70814935460274383686770069439052009243519764704353381117186", -120)
              .contains(b));
}

TEST_CASE("beta symmetry") {
    Real x = Real::of_ratio(1, 4, 256), y = Real::of_ratio(3, 4, 256);
    CHECK(beta_v(x, y, 40).overlaps(beta_v(y, x, 40)));
}

TEST_CASE("requested relative width is certified") {
    for (long digits : {30L, 60L, 120L}) {
        Real g = gamma_v(Real::of_ratio(1, 4, bits_for_digits(digits + 10)), digits);
        CHECK(rel_width_ok(g, digits));
    }
}

TEST_CASE("rel_width_ok semantics") {
    Real exact = Real::of_si(3, 64);
    CHECK(rel_width_ok(exact, 1000));
    Real wide = Real::of_si(1, 64);
    wide.add_error_2exp(-10);
    CHECK(rel_width_ok(wide, 2));
    CHECK_FALSE(rel_width_ok(wide, 6));
    Real zero_mid = Real::of_si(0, 64);
    zero_mid.add_error_2exp(-50);
    CHECK_FALSE(rel_width_ok(zero_mid, 10));
}
