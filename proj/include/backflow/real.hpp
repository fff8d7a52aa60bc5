#pragma once

#include <mpfr.h>

#include <string>
#include <utility>

#include "backflow/errors.hpp"
#include "backflow/prec.hpp"

namespace backflow {

// Self-validating real number: an MPFR midpoint at the working precision and
// a low-precision, upward-rounded radius.  Invariant: the represented real
// value lies in [mid - rad, mid + rad], and every operation preserves this
// (rounding of the midpoint is absorbed into the radius, one ulp per op).
class Real {
  public:
    static constexpr mpfr_prec_t kRadPrec = 32;

    explicit Real(mpfr_prec_t prec = 64);
    Real(const Real& o);
    Real(Real&& o) noexcept;
    Real& operator=(const Real& o);
    Real& operator=(Real&& o) noexcept;
    ~Real();

    // Exact-value factories (radius 0).
    static Real of_si(long v, mpfr_prec_t prec);
    static Real of_d(double v, mpfr_prec_t prec);
    // Rounded factories (radius covers the representation error).
    static Real of_str(const char* s, mpfr_prec_t prec);
    static Real of_ratio(long num, long den, mpfr_prec_t prec);
    static Real pi(mpfr_prec_t prec);
    // Ball from directed-rounded endpoints lo <= hi.
    static Real of_interval(mpfr_srcptr lo, mpfr_srcptr hi, mpfr_prec_t prec);

    mpfr_prec_t prec() const { return mpfr_get_prec(mid_); }
    mpfr_srcptr mid() const { return mid_; }
    mpfr_ptr mid_rw() { return mid_; }
    mpfr_srcptr rad() const { return rad_; }

    bool is_exact() const { return mpfr_zero_p(rad_); }
    double mid_d() const { return mpfr_get_d(mid_, MPFR_RNDN); }
    double rad_d() const;                 // upper bound (never rounds to 0 unless exact)
    long rad_log2_ceil() const;           // smallest e with rad <= 2^e; LONG_MIN if rad = 0
    void lower(mpfr_ptr out) const;       // out := mid - rad, rounded down
    void upper(mpfr_ptr out) const;       // out := mid + rad, rounded up
    double lower_d() const;
    double upper_d() const;

    bool certainly_positive() const { return lower_d_sign() > 0; }
    bool certainly_negative() const { return upper_d_sign() < 0; }
    bool contains_zero() const { return lower_d_sign() <= 0 && upper_d_sign() >= 0; }
    bool contains(const Real& o) const;   // o's interval inside ours
    bool overlaps(const Real& o) const;

    // Inflate the radius (used for truncation-tail bounds).
    void add_error(const Real& bound);    // |bound| hull added
    void add_error_2exp(long e);          // radius += 2^e

    std::string mid_string(long digits) const;

    Real& operator+=(const Real& o) { *this = *this + o; return *this; }
    Real& operator-=(const Real& o) { *this = *this - o; return *this; }
    Real& operator*=(const Real& o) { *this = *this * o; return *this; }
    Real& operator/=(const Real& o) { *this = *this / o; return *this; }

    friend Real operator+(const Real& a, const Real& b);
    friend Real operator-(const Real& a, const Real& b);
    friend Real operator*(const Real& a, const Real& b);
    friend Real operator/(const Real& a, const Real& b);
    friend Real operator-(const Real& a);

    friend Real add_si(const Real& a, long b);
    friend Real mul_si(const Real& a, long b);
    friend Real div_si(const Real& a, long b);    // b != 0, exact divisor
    friend Real sqr(const Real& a);
    friend Real abs(const Real& a);
    friend Real sqrt(const Real& a);              // lower endpoint >= 0
    friend Real exp(const Real& a);
    friend Real log(const Real& a);               // lower endpoint > 0
    friend Real atan(const Real& a);
    friend Real sin(const Real& a);
    friend Real cos(const Real& a);
    friend Real pow_si(const Real& a, long n);    // positive base
    friend Real pow(const Real& a, const Real& e);  // positive base, exact exponent
    friend Real min(const Real& a, const Real& b);  // interval hull respecting order
    friend Real max(const Real& a, const Real& b);

  private:
    void bump_rounding(int ternary);      // fold one midpoint ulp into rad_
    int lower_d_sign() const;
    int upper_d_sign() const;

    mpfr_t mid_;
    mpfr_t rad_;
};

}  // namespace backflow
