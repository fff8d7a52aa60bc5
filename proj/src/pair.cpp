#include "backflow/pair.hpp"

#include <memory>

namespace backflow {

Real real_pow2(long e, mpfr_prec_t prec) {
    Real r = Real::of_si(1, prec);
    mpfr_mul_2si(r.mid_rw(), r.mid(), e, MPFR_RNDN);  // exact scaling
    return r;
}

Real MatrixPair::element_radius() const {
    long e = a_rad_log2;
    if (b_rad_log2 != LONG_MIN && (e == LONG_MIN || b_rad_log2 > e)) e = b_rad_log2;
    if (e == LONG_MIN) return Real::of_si(0, 64);
    return real_pow2(e);
}

namespace {

// Modulus-radius bound of a complex ball as a log2 exponent: the radius of
// the box is at most sqrt(2) * max(rad_re, rad_im) <= 2^(max_exp + 1).
long complex_rad_log2(const Complex& z) {
    long er = z.re.rad_log2_ceil();
    long ei = z.im.rad_log2_ceil();
    long e = er > ei ? er : ei;
    if (e == LONG_MIN) return LONG_MIN;
    return e + 1;
}

}  // namespace

MatrixPair build_pair(int dim, const TimeGrid& grid, const BasisSpec& spec, long element_digits,
                      const std::string& cache_dir, const std::function<void(int, int)>& progress) {
    if (dim < 1) throw domain_error("matrix pair dimension must be >= 1");
    spec.validate();

    MatrixPair pair;
    pair.dim = dim;
    pair.grid = grid;
    pair.spec = spec;
    pair.element_digits = element_digits;
    pair.complex_mode = !grid.symmetric();
    pair.a.assign(static_cast<std::size_t>(dim) * dim, Complex(64));
    pair.b.assign(static_cast<std::size_t>(dim) * dim, Real(64));

    // Stored cache entries carry two extra certified digits so that the
    // decimal round trip plus the stored radius stays below 10^-element_digits.
    std::unique_ptr<ElementCache> cache;
    long request_digits = element_digits;
    if (!cache_dir.empty()) {
        request_digits = element_digits + 2;
        cache = std::make_unique<ElementCache>(cache_dir, grid, spec, request_digits);
    }

    const int total = dim * (dim + 1) / 2;
    int done = 0;
    for (int m = 0; m < dim; ++m) {
        for (int n = m; n < dim; ++n) {
            Complex amn(64);
            bool hit = cache && cache->lookup(m, n, amn);
            if (!hit) {
                amn = mfold_element(m, n, grid, spec, request_digits);
                if (cache) cache->store(m, n, amn);
            }
            long e = complex_rad_log2(amn);
            if (e != LONG_MIN && (pair.a_rad_log2 == LONG_MIN || e > pair.a_rad_log2))
                pair.a_rad_log2 = e;
            if (n != m) pair.a[static_cast<std::size_t>(n) * dim + m] = conj(amn);
            pair.a[static_cast<std::size_t>(m) * dim + n] = std::move(amn);

            Real bmn = gram_element(m, n, spec.delta, element_digits);
            long eb = bmn.rad_log2_ceil();
            if (eb != LONG_MIN && (pair.b_rad_log2 == LONG_MIN || eb > pair.b_rad_log2))
                pair.b_rad_log2 = eb;
            if (n != m) pair.b[static_cast<std::size_t>(n) * dim + m] = bmn;
            pair.b[static_cast<std::size_t>(m) * dim + n] = std::move(bmn);

            ++done;
            if (progress) progress(done, total);
        }
    }
    return pair;
}

}  // namespace backflow
