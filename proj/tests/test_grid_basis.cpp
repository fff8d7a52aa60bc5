#include <cmath>

#include "backflow/basis.hpp"
#include "backflow/errors.hpp"
#include "backflow/grid.hpp"
#include "backflow/oracle.hpp"
#include "backflow/prec.hpp"
#include "backflow/quad.hpp"
#include "test_main.hpp"

using namespace backflow;

TEST_CASE("time grids validate ordering and exclude zero") {
    CHECK_NOTHROW(TimeGrid({-1.5, -0.5, 0.5, 1.5}));
    CHECK_THROWS_AS(TimeGrid({0.5, -0.5}), domain_error);        // not increasing
    CHECK_THROWS_AS(TimeGrid({-0.5, 0.5, 1.5}), domain_error);   // odd count
    CHECK_THROWS_AS(TimeGrid({-0.5, 0.0, 0.5, 1.5}), domain_error);  // zero instant
    CHECK_THROWS_AS(TimeGrid({-0.5, -0.5, 0.5, 1.5}), domain_error);  // repeated
    CHECK_THROWS_AS(TimeGrid({}), domain_error);
}

TEST_CASE("equal spacing grid and shape parameters") {
    TimeGrid g1 = equal_spacing_grid(1, 1.0);
    CHECK(g1.fold() == 1);
    CHECK(g1.times() == std::vector<double>{-0.5, 0.5});
    CHECK(g1.symmetric());
    CHECK(srsd(g1).empty());

    TimeGrid g3 = equal_spacing_grid(3, 2.0);
    CHECK(g3.fold() == 3);
    CHECK(g3.front() == -5.0);
    CHECK(g3.back() == 5.0);
    CHECK(g3.symmetric());
    auto shape = srsd(g3);
    REQUIRE(shape.size() == 4);
    for (double r : shape) CHECK(r == 1.0);

    TimeGrid asym({0.5, 1.0, 3.0, 7.0});
    CHECK_FALSE(asym.symmetric());
    auto s = srsd(asym);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == doctest::Approx(4.0));   // (3-1)/(1-0.5)
    CHECK(s[1] == doctest::Approx(2.0));   // (7-3)/(3-1)
}

TEST_CASE("grid serialization round-trips exactly") {
    TimeGrid g({-1.25, -0.3333333333333333, 0.1, 2.7182818284590452});
    TimeGrid back = TimeGrid::from_kv(g.to_kv());
    CHECK(back == g);
}

TEST_CASE("basis spec validation and fold defaults") {
    BasisSpec ok{1.0, 0.25};
    CHECK_NOTHROW(ok.validate());
    BasisSpec bad_a{0.0, 0.0};
    CHECK_THROWS_AS(bad_a.validate(), domain_error);
    BasisSpec bad_d{1.0, 0.5};
    CHECK_THROWS_AS(bad_d.validate(), domain_error);

    for (int M : {1, 2, 4}) {
        BasisSpec s = BasisSpec::for_fold(M);
        CHECK(s.delta == -0.25);
        CHECK(s.a == doctest::Approx(2.0 * M / 3.14159265358979323846).epsilon(1e-15));
    }
    BasisSpec rt = BasisSpec::from_kv(BasisSpec::for_fold(3).to_kv());
    CHECK(rt == BasisSpec::for_fold(3));
}

TEST_CASE("ground state at a=1, delta=0 is sqrt(2) exp(-q)") {
    BasisSpec s{1.0, 0.0};
    for (double q : {0.1, 0.5, 1.0, 2.5, 10.0}) {
        double want = std::sqrt(2.0) * std::exp(-q);
        CHECK(basis_eval(0, s, q) == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("basis functions are L2-normalized") {
    BasisSpec s{0.6366197723675814, -0.25};  // 2/pi
    QuadOptions opt;
    opt.abs_tol = 1e-11;
    for (long n : {0L, 1L, 5L, 12L}) {
        auto f = [&](double q) {
            double v = basis_eval(n, s, q);
            return v * v;
        };
        // integrate out to where the envelope is negligible
        double hi = (static_cast<double>(n) + 40.0) / s.a;
        auto r = integrate_1d(f, 1e-12, hi, opt);
        REQUIRE(r.converged);
        CHECK(std::fabs(r.value - 1.0) < 1e-8);
    }
}

TEST_CASE("density peaks at q = (n + delta)/a") {
    BasisSpec s{1.3, -0.25};
    for (long n : {1L, 4L, 9L}) {
        double qpeak = (static_cast<double>(n) + s.delta) / s.a;
        double at = std::fabs(basis_eval(n, s, qpeak));
        CHECK(std::fabs(basis_eval(n, s, qpeak * 1.05)) < at);
        CHECK(std::fabs(basis_eval(n, s, qpeak * 0.95)) < at);
    }
}

TEST_CASE("certified point values agree with the double evaluator") {
    BasisSpec s{0.6366197723675814, -0.25};
    for (long n : {0L, 3L, 17L}) {
        for (double q : {0.05, 1.0, 7.5}) {
            Real v = basis_eval_r(n, s, Real::of_d(q, 256), 40);
            CHECK(std::fabs(v.mid_d() - basis_eval(n, s, q)) <
                  1e-13 * (std::fabs(v.mid_d()) + 1));
        }
    }
}

TEST_CASE("gram element frozen value: (0,1) at delta = -1/4 is 1/sqrt(3)") {
    Real g = gram_element(0, 1, -0.25, 40);
    // 1/sqrt(3) to 40 digits
    Real ref = Real::of_str("0.5773502691896257645091487805019574556476", 256);
    ref.add_error_2exp(-129);
    CHECK(ref.contains(g));
    // agreement to 30 digits
    Real diff = g - Real::of_si(1, 256) / sqrt(Real::of_si(3, 256));
    CHECK(abs(diff).upper_d() < 1e-30);
}

TEST_CASE("gram diagonal is exactly one") {
    for (long n : {0L, 1L, 7L}) {
        Real g = gram_element(n, n, -0.25, 30);
        CHECK(g.is_exact());
        CHECK(g.mid_d() == 1.0);
    }
}

TEST_CASE("gram is independent of the rate parameter") {
    // The overlap integral depends only on delta; the quadrature oracle runs
    // at two different rates and must agree with the closed form.
    BasisSpec s1{0.9, -0.25}, s2{2.3, -0.25};
    double g12_a = gram_quadrature(1, 2, s1);
    double g12_b = gram_quadrature(1, 2, s2);
    CHECK(std::fabs(g12_a - g12_b) < 1e-10);
    Real cf = gram_element(1, 2, -0.25, 40);
    CHECK(std::fabs(cf.mid_d() - g12_a) < 1e-10);
}

TEST_CASE("closed-form gram matches quadrature for m, n <= 8") {
    BasisSpec s{0.6366197723675814, -0.25};
    for (long m = 0; m <= 8; ++m) {
        for (long n = m; n <= 8; ++n) {
            double q = gram_quadrature(m, n, s);
            Real cf = gram_element(m, n, s.delta, 40);
            CHECK(std::fabs(cf.mid_d() - q) <= 1e-10);
        }
    }
}

TEST_CASE("gram certified width honors the digit request") {
    Real g = gram_element(2, 9, -0.25, 60);
    CHECK(g.rad_d() <= 1e-60 * std::fabs(g.mid_d()) * 1.01);
}
