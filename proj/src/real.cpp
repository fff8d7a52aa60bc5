#include "backflow/real.hpp"

#include <climits>
#include <cmath>
#include <cstdio>
#include <vector>

namespace backflow {

namespace {

// RAII scratch value.
struct Tmp {
    mpfr_t v;
    explicit Tmp(mpfr_prec_t p) { mpfr_init2(v, p); }
    ~Tmp() { mpfr_clear(v); }
    operator mpfr_ptr() { return v; }
    operator mpfr_srcptr() const { return v; }
    Tmp(const Tmp&) = delete;
    Tmp& operator=(const Tmp&) = delete;
};

mpfr_prec_t max_prec(const Real& a, const Real& b) {
    return a.prec() > b.prec() ? a.prec() : b.prec();
}

// rad += |x| rounded up (at radius precision).
void rad_add_abs(mpfr_ptr rad, mpfr_srcptr x) {
    Tmp t(Real::kRadPrec);
    mpfr_abs(t, x, MPFR_RNDU);
    mpfr_add(rad, rad, t, MPFR_RNDU);
}

}  // namespace

Real::Real(mpfr_prec_t prec) {
    mpfr_init2(mid_, prec);
    mpfr_set_zero(mid_, 1);
    mpfr_init2(rad_, kRadPrec);
    mpfr_set_zero(rad_, 1);
}

Real::Real(const Real& o) {
    mpfr_init2(mid_, o.prec());
    mpfr_set(mid_, o.mid_, MPFR_RNDN);
    mpfr_init2(rad_, kRadPrec);
    mpfr_set(rad_, o.rad_, MPFR_RNDU);
}

Real::Real(Real&& o) noexcept {
    mpfr_init2(mid_, 2);
    mpfr_init2(rad_, kRadPrec);
    mpfr_swap(mid_, o.mid_);
    mpfr_swap(rad_, o.rad_);
}

Real& Real::operator=(const Real& o) {
    if (this != &o) {
        mpfr_set_prec(mid_, o.prec());
        mpfr_set(mid_, o.mid_, MPFR_RNDN);
        mpfr_set(rad_, o.rad_, MPFR_RNDU);
    }
    return *this;
}

Real& Real::operator=(Real&& o) noexcept {
    if (this != &o) {
        mpfr_swap(mid_, o.mid_);
        mpfr_swap(rad_, o.rad_);
    }
    return *this;
}

Real::~Real() {
    mpfr_clear(mid_);
    mpfr_clear(rad_);
}

void Real::bump_rounding(int ternary) {
    if (ternary == 0) return;
    // The rounded result differs from the exact one by less than one ulp,
    // i.e. 2^(exp - prec), for every rounding mode (a deliberate factor-2
    // slack over the round-to-nearest half-ulp bound).
    if (mpfr_zero_p(mid_)) {
        // Cannot happen away from exponent-range underflow, which the default
        // MPFR range makes unreachable for this code base.
        mpfr_set_ui_2exp(rad_, 1, mpfr_get_emin(), MPFR_RNDU);
        return;
    }
    Tmp ulp(kRadPrec);
    mpfr_set_ui_2exp(ulp, 1, mpfr_get_exp(mid_) - prec(), MPFR_RNDU);
    mpfr_add(rad_, rad_, ulp, MPFR_RNDU);
}

Real Real::of_si(long v, mpfr_prec_t prec) {
    Real r(prec);
    int t = mpfr_set_si(r.mid_, v, MPFR_RNDN);
    r.bump_rounding(t);
    return r;
}

Real Real::of_d(double v, mpfr_prec_t prec) {
    Real r(prec);
    int t = mpfr_set_d(r.mid_, v, MPFR_RNDN);
    r.bump_rounding(t);  // exact for prec >= 53
    return r;
}

Real Real::of_str(const char* s, mpfr_prec_t prec) {
    Real r(prec);
    int t = mpfr_set_str(r.mid_, s, 10, MPFR_RNDN);
    if (t == -1 && mpfr_nan_p(r.mid_)) throw domain_error("unparsable number string");
    r.bump_rounding(1);  // set_str's ternary is unreliable across bases; assume inexact
    return r;
}

Real Real::of_ratio(long num, long den, mpfr_prec_t prec) {
    if (den == 0) throw domain_error("zero denominator");
    Real r = of_si(num, prec);
    return div_si(r, den);
}

Real Real::pi(mpfr_prec_t prec) {
    Real r(prec);
    int t = mpfr_const_pi(r.mid_, MPFR_RNDN);
    r.bump_rounding(t);
    return r;
}

Real Real::of_interval(mpfr_srcptr lo, mpfr_srcptr hi, mpfr_prec_t prec) {
    Real r(prec);
    int t = mpfr_add(r.mid_, lo, hi, MPFR_RNDN);
    mpfr_div_2si(r.mid_, r.mid_, 1, MPFR_RNDN);  // exact
    r.bump_rounding(t);
    // radius = max(mid - lo, hi - mid), both rounded up.
    Tmp d1(kRadPrec), d2(kRadPrec);
    mpfr_sub(d1, r.mid_, lo, MPFR_RNDU);
    mpfr_sub(d2, hi, r.mid_, MPFR_RNDU);
    if (mpfr_cmp(d1, d2) < 0) mpfr_swap(d1, d2);
    if (mpfr_sgn(d1.v) > 0) mpfr_add(r.rad_, r.rad_, d1, MPFR_RNDU);
    return r;
}

double Real::rad_d() const {
    double d = mpfr_get_d(rad_, MPFR_RNDU);
    if (d == 0.0 && !mpfr_zero_p(rad_)) return 5e-324;
    return d;
}

long Real::rad_log2_ceil() const {
    if (mpfr_zero_p(rad_)) return LONG_MIN;
    // rad < 2^exp always (mantissa in [1/2, 1)), so exp itself is an upper bound.
    return mpfr_get_exp(rad_);
}

void Real::lower(mpfr_ptr out) const { mpfr_sub(out, mid_, rad_, MPFR_RNDD); }
void Real::upper(mpfr_ptr out) const { mpfr_add(out, mid_, rad_, MPFR_RNDU); }

double Real::lower_d() const {
    Tmp t(prec());
    lower(t);
    return mpfr_get_d(t, MPFR_RNDD);
}

double Real::upper_d() const {
    Tmp t(prec());
    upper(t);
    return mpfr_get_d(t, MPFR_RNDU);
}

int Real::lower_d_sign() const {
    Tmp t(prec());
    lower(t);
    return mpfr_sgn(t.v);
}

int Real::upper_d_sign() const {
    Tmp t(prec());
    upper(t);
    return mpfr_sgn(t.v);
}

bool Real::contains(const Real& o) const {
    Tmp a(prec() + kRadPrec), b(o.prec() + kRadPrec);
    lower(a);
    o.lower(b);
    if (mpfr_cmp(a, b) > 0) return false;
    upper(a);
    o.upper(b);
    return mpfr_cmp(b, a) <= 0;
}

bool Real::overlaps(const Real& o) const {
    Tmp a(prec() + kRadPrec), b(o.prec() + kRadPrec);
    upper(a);
    o.lower(b);
    if (mpfr_cmp(a, b) < 0) return false;
    lower(a);
    o.upper(b);
    return mpfr_cmp(a, b) <= 0;
}

void Real::add_error(const Real& bound) {
    rad_add_abs(rad_, bound.mid_);
    mpfr_add(rad_, rad_, bound.rad_, MPFR_RNDU);
}

void Real::add_error_2exp(long e) {
    Tmp t(kRadPrec);
    mpfr_set_ui_2exp(t, 1, e, MPFR_RNDU);
    mpfr_add(rad_, rad_, t, MPFR_RNDU);
}

std::string Real::mid_string(long digits) const {
    std::vector<char> buf(digits + 32);
    mpfr_snprintf(buf.data(), buf.size(), "%.*Re", static_cast<int>(digits), mid_);
    return std::string(buf.data());
}

Real operator+(const Real& a, const Real& b) {
    Real r(max_prec(a, b));
    int t = mpfr_add(r.mid_, a.mid_, b.mid_, MPFR_RNDN);
    mpfr_add(r.rad_, a.rad_, b.rad_, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real operator-(const Real& a, const Real& b) {
    Real r(max_prec(a, b));
    int t = mpfr_sub(r.mid_, a.mid_, b.mid_, MPFR_RNDN);
    mpfr_add(r.rad_, a.rad_, b.rad_, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real operator-(const Real& a) {
    Real r(a);
    mpfr_neg(r.mid_, r.mid_, MPFR_RNDN);  // exact
    return r;
}

Real operator*(const Real& a, const Real& b) {
    Real r(max_prec(a, b));
    int t = mpfr_mul(r.mid_, a.mid_, b.mid_, MPFR_RNDN);
    // |xy - am*bm| <= |am| rb + |bm| ra + ra rb
    Tmp am(Real::kRadPrec), bm(Real::kRadPrec), acc(Real::kRadPrec);
    mpfr_abs(am, a.mid_, MPFR_RNDU);
    mpfr_abs(bm, b.mid_, MPFR_RNDU);
    mpfr_mul(acc, am, b.rad_, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
    mpfr_mul(acc, bm, a.rad_, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
    mpfr_mul(acc, a.rad_, b.rad_, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real operator/(const Real& a, const Real& b) {
    // |x/y - am/bm| = |ea*bm - am*eb| / (|y| |bm|) <= (ra|bm| + |am|rb) / (|bm|(|bm|-rb))
    Tmp bm_lo(Real::kRadPrec), den(Real::kRadPrec);
    mpfr_abs(bm_lo, b.mid_, MPFR_RNDD);
    mpfr_sub(den, bm_lo, b.rad_, MPFR_RNDD);
    if (mpfr_sgn(den.v) <= 0) throw domain_error("division by an interval containing zero");
    Real r(max_prec(a, b));
    int t = mpfr_div(r.mid_, a.mid_, b.mid_, MPFR_RNDN);
    Tmp am(Real::kRadPrec), bm(Real::kRadPrec), num(Real::kRadPrec), acc(Real::kRadPrec);
    mpfr_abs(am, a.mid_, MPFR_RNDU);
    mpfr_abs(bm, b.mid_, MPFR_RNDU);
    mpfr_mul(num, a.rad_, bm, MPFR_RNDU);
    mpfr_mul(acc, am, b.rad_, MPFR_RNDU);
    mpfr_add(num, num, acc, MPFR_RNDU);
    mpfr_mul(den, den, bm_lo, MPFR_RNDD);
    mpfr_div(num, num, den, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, num, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real add_si(const Real& a, long b) {
    Real r(a);
    int t = mpfr_add_si(r.mid_, r.mid_, b, MPFR_RNDN);
    r.bump_rounding(t);
    return r;
}

Real mul_si(const Real& a, long b) {
    Real r(a);
    int t = mpfr_mul_si(r.mid_, r.mid_, b, MPFR_RNDN);
    mpfr_mul_si(r.rad_, r.rad_, b < 0 ? -b : b, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real div_si(const Real& a, long b) {
    if (b == 0) throw domain_error("division by zero");
    Real r(a);
    int t = mpfr_div_si(r.mid_, r.mid_, b, MPFR_RNDN);
    mpfr_div_si(r.rad_, r.rad_, b < 0 ? -b : b, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real sqr(const Real& a) {
    Real r(a.prec());
    int t = mpfr_sqr(r.mid_, a.mid_, MPFR_RNDN);
    Tmp am(Real::kRadPrec), acc(Real::kRadPrec);
    mpfr_abs(am, a.mid_, MPFR_RNDU);
    mpfr_mul(acc, am, a.rad_, MPFR_RNDU);
    mpfr_mul_2si(acc, acc, 1, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
    mpfr_sqr(acc, a.rad_, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real abs(const Real& a) {
    Real r(a);
    mpfr_abs(r.mid_, r.mid_, MPFR_RNDN);  // exact; interval may now dip below 0, still sound
    return r;
}

namespace {

// Monotone function applied to interval endpoints.  dir > 0: increasing.
template <typename F>
Real monotone(const Real& a, int dir, F&& f) {
    Tmp lo(a.prec()), hi(a.prec()), flo(a.prec()), fhi(a.prec());
    a.lower(lo);
    a.upper(hi);
    if (dir > 0) {
        f(flo, lo, MPFR_RNDD);
        f(fhi, hi, MPFR_RNDU);
    } else {
        f(flo, hi, MPFR_RNDD);
        f(fhi, lo, MPFR_RNDU);
    }
    return Real::of_interval(flo, fhi, a.prec());
}

}  // namespace

Real sqrt(const Real& a) {
    Tmp lo(a.prec());
    a.lower(lo);
    if (mpfr_sgn(lo.v) < 0) throw domain_error("sqrt of interval reaching below zero");
    return monotone(a, +1, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t r) { mpfr_sqrt(o, x, r); });
}

Real exp(const Real& a) {
    return monotone(a, +1, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t r) { mpfr_exp(o, x, r); });
}

Real log(const Real& a) {
    Tmp lo(a.prec());
    a.lower(lo);
    if (mpfr_sgn(lo.v) <= 0) throw domain_error("log of interval reaching zero");
    return monotone(a, +1, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t r) { mpfr_log(o, x, r); });
}

Real atan(const Real& a) {
    return monotone(a, +1, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t r) { mpfr_atan(o, x, r); });
}

Real sin(const Real& a) {
    Real r(a.prec());
    int t = mpfr_sin(r.mid_, a.mid_, MPFR_RNDN);
    mpfr_add(r.rad_, r.rad_, a.rad_, MPFR_RNDU);  // Lipschitz constant 1
    r.bump_rounding(t);
    return r;
}

Real cos(const Real& a) {
    Real r(a.prec());
    int t = mpfr_cos(r.mid_, a.mid_, MPFR_RNDN);
    mpfr_add(r.rad_, r.rad_, a.rad_, MPFR_RNDU);
    r.bump_rounding(t);
    return r;
}

Real pow_si(const Real& a, long n) {
    if (n == 0) return Real::of_si(1, a.prec());
    Tmp lo(a.prec());
    a.lower(lo);
    if (mpfr_sgn(lo.v) <= 0) throw domain_error("pow_si requires a positive base interval");
    return monotone(a, n > 0 ? +1 : -1,
                    [n](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t r) { mpfr_pow_si(o, x, n, r); });
}

Real pow(const Real& a, const Real& e) {
    if (!e.is_exact()) throw domain_error("pow requires an exact exponent");
    Tmp lo(a.prec());
    a.lower(lo);
    if (mpfr_sgn(lo.v) <= 0) throw domain_error("pow requires a positive base interval");
    int dir = mpfr_sgn(e.mid()) >= 0 ? +1 : -1;
    mpfr_srcptr ex = e.mid();
    return monotone(a, dir,
                    [ex](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t r) { mpfr_pow(o, x, ex, r); });
}

Real min(const Real& a, const Real& b) {
    Tmp alo(a.prec()), ahi(a.prec()), blo(b.prec()), bhi(b.prec());
    a.lower(alo);
    a.upper(ahi);
    b.lower(blo);
    b.upper(bhi);
    if (mpfr_cmp(blo, alo) < 0) mpfr_swap(alo, blo);
    if (mpfr_cmp(bhi, ahi) < 0) mpfr_swap(ahi, bhi);
    return Real::of_interval(alo, ahi, max_prec(a, b));
}

Real max(const Real& a, const Real& b) {
    Tmp alo(a.prec()), ahi(a.prec()), blo(b.prec()), bhi(b.prec());
    a.lower(alo);
    a.upper(ahi);
    b.lower(blo);
    b.upper(bhi);
    if (mpfr_cmp(blo, alo) > 0) mpfr_swap(alo, blo);
    if (mpfr_cmp(bhi, ahi) > 0) mpfr_swap(ahi, bhi);
    return Real::of_interval(alo, ahi, max_prec(a, b));
}

}  // namespace backflow
