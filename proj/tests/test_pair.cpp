// Tests for the assembled matrix pair: entry identity with the element and
// Gram evaluators, Hermitian/real structure, nesting of leading blocks,
// certified entry radii (with and without the disk cache), progress
// reporting, and the Gram conditioning model.
#include "test_main.hpp"

#include <cmath>
#include <filesystem>
#include <utility>
#include <vector>

#include "backflow/eigen.hpp"
#include "backflow/pair.hpp"

using namespace backflow;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("bfp_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Real ref_ball(const char* s, long err_exp2) {
    Real r = Real::of_str(s, 400);
    r.add_error_2exp(err_exp2);
    return r;
}

}  // namespace

TEST_CASE("exact powers of two") {
    Real p = real_pow2(-3);
    CHECK(p.is_exact());
    CHECK(p.mid_d() == 0.125);
    CHECK(real_pow2(5).mid_d() == 32.0);
    CHECK(real_pow2(-8000).is_exact());  // far below double range, still exact
}

TEST_CASE("pair entries reproduce the element and Gram evaluators") {
    TimeGrid grid = equal_spacing_grid(1, 1.0);
    BasisSpec spec = BasisSpec::for_fold(1);
    MatrixPair pair = build_pair(4, grid, spec, 30);
    CHECK(pair.dim == 4);
    CHECK(!pair.complex_mode);

    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            Complex e = mfold_element(i, j, grid, spec, 32);
            CHECK(pair.A(i, j).re.overlaps(e.re));
            CHECK(pair.A(i, j).im.overlaps(e.im));
            Real g = gram_element(i, j, spec.delta, 32);
            CHECK(pair.B(i, j).overlaps(g));
        }
    }
    // Unit diagonal of the overlap matrix is exact.
    for (int i = 0; i < 4; ++i) {
        CHECK(pair.B(i, i).is_exact());
        CHECK(pair.B(i, i).mid_d() == 1.0);
    }
    // Known off-diagonal overlap at delta = -1/4.
    CHECK(ref_ball("0.5773502691896257645091487805019574556476", -120)
              .contains(pair.B(0, 1)));
}

TEST_CASE("symmetric grids give a real pair, asymmetric grids a complex one") {
    MatrixPair sym = build_pair(3, equal_spacing_grid(2, 1.0), BasisSpec::for_fold(2), 30);
    CHECK(!sym.complex_mode);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(sym.A(i, j).im.contains_zero());

    TimeGrid asym({0.5, 1.0, 3.0, 7.0});
    MatrixPair cx = build_pair(3, asym, BasisSpec::for_fold(2), 30);
    CHECK(cx.complex_mode);
    bool any_complex = false;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            // Hermitian: A(i,j) == conj A(j,i).
            CHECK(cx.A(i, j).re.overlaps(cx.A(j, i).re));
            CHECK(cx.A(i, j).im.overlaps(-cx.A(j, i).im));
            if (cx.A(i, j).im.certainly_positive()) any_complex = true;
        }
        // Overlap matrix is real symmetric regardless of the grid.
        for (int j = i; j < 3; ++j) CHECK(cx.B(i, j).overlaps(cx.B(j, i)));
    }
    CHECK(any_complex);
}

TEST_CASE("leading principal blocks nest") {
    TimeGrid grid = equal_spacing_grid(1, 1.0);
    BasisSpec spec = BasisSpec::for_fold(1);
    MatrixPair small = build_pair(5, grid, spec, 30);
    MatrixPair big = build_pair(8, grid, spec, 30);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            CHECK(small.A(i, j).re.mid_string(32) == big.A(i, j).re.mid_string(32));
            CHECK(small.A(i, j).im.mid_string(32) == big.A(i, j).im.mid_string(32));
            CHECK(small.B(i, j).mid_string(32) == big.B(i, j).mid_string(32));
        }
    }
}

TEST_CASE("entry radii are certified, also after a cache round trip") {
    fs::path dir = fresh_dir("radii");
    TimeGrid grid = equal_spacing_grid(1, 1.0);
    BasisSpec spec = BasisSpec::for_fold(1);

    MatrixPair fresh = build_pair(5, grid, spec, 30, dir.string());
    Real r1 = fresh.element_radius();
    CHECK(r1.is_exact());
    CHECK(r1.mid_d() <= 2e-30);      // 1e-30 contract, rounded up to 2^-99
    CHECK(fresh.a_rad_log2 <= -99);  // ceil(log2 1e-30) = -99
    CHECK(fresh.b_rad_log2 <= -99);

    // The cache now holds the upper triangle.
    auto reports = cache_scan(dir.string());
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].ok);
    CHECK(reports[0].records == 15);

    // Rebuild through the cache: entries stay within the certified radius and
    // the midpoints move by at most the combined ball radii.
    MatrixPair reloaded = build_pair(5, grid, spec, 30, dir.string());
    CHECK(reloaded.element_radius().mid_d() <= 2e-30);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            CHECK(std::fabs(reloaded.A(i, j).re.mid_d() - fresh.A(i, j).re.mid_d()) <= 2e-30);
            CHECK(reloaded.A(i, j).re.overlaps(fresh.A(i, j).re));
        }
    }
    CHECK(cache_scan(dir.string())[0].records == 15);  // no growth on re-run
}

TEST_CASE("progress reports each upper-triangle entry once") {
    std::vector<std::pair<int, int>> calls;
    build_pair(4, equal_spacing_grid(1, 1.0), BasisSpec::for_fold(1), 25, "",
               [&](int done, int total) { calls.emplace_back(done, total); });
    REQUIRE(calls.size() == 10);  // 4*5/2 entries
    for (int k = 0; k < 10; ++k) {
        CHECK(calls[static_cast<std::size_t>(k)].first == k + 1);
        CHECK(calls[static_cast<std::size_t>(k)].second == 10);
    }
}

TEST_CASE("Gram conditioning follows the decade-per-level model") {
    // The minimum Gram eigenvalue shrinks like 10^(2 - 0.94 N); verify the
    // certified ball lands within 1.5 decades of the model at N = 25.
    const int n = 25;
    TimeGrid grid = equal_spacing_grid(1, 1.0);
    BasisSpec spec = BasisSpec::for_fold(1);
    MatrixPair pair = build_pair(n, grid, spec, 40);
    PencilLadder ladder(pair, internal_solve_digits(40, n));
    ladder.extend_to(n);
    Real minb = ladder.min_b_eigen(pair.b_rad_log2);
    CHECK(minb.lower_d() > 0.0);  // positive definite, certified
    double model = 2.0 - 0.94 * n;
    CHECK(std::fabs(std::log10(minb.mid_d()) - model) <= 1.5);
}
