#pragma once

#include "backflow/real.hpp"

namespace backflow {

// Rectangular complex ball: independent real and imaginary Real balls.  The
// represented complex value lies in the axis-aligned box re x im.
class Complex {
  public:
    Real re;
    Real im;

    explicit Complex(mpfr_prec_t prec = 64) : re(prec), im(prec) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}

    static Complex of_d(double r, double i, mpfr_prec_t prec) {
        return Complex(Real::of_d(r, prec), Real::of_d(i, prec));
    }
    static Complex of_real(Real r) {
        Real z(r.prec());
        return Complex(std::move(r), std::move(z));
    }

    mpfr_prec_t prec() const { return re.prec() > im.prec() ? re.prec() : im.prec(); }
    bool is_exact() const { return re.is_exact() && im.is_exact(); }
    bool contains_zero() const { return re.contains_zero() && im.contains_zero(); }

    // Upper bound on the distance between true value and midpoint.
    double rad_d() const;
    // rad_up/abs bounds as Real point values (exact carriers for bound math).
    Real rad_upper(mpfr_prec_t prec = 64) const;   // >= sqrt(rad_re^2 + rad_im^2)
    Real abs_upper(mpfr_prec_t prec = 64) const;   // >= sup |z|
    Real abs_lower(mpfr_prec_t prec = 64) const;   // <= inf |z| (>= 0)

    void add_error(const Real& bound);             // inflate both component radii

    Complex& operator+=(const Complex& o) { *this = *this + o; return *this; }
    Complex& operator-=(const Complex& o) { *this = *this - o; return *this; }
    Complex& operator*=(const Complex& o) { *this = *this * o; return *this; }
    Complex& operator/=(const Complex& o) { *this = *this / o; return *this; }

    friend Complex operator+(const Complex& a, const Complex& b);
    friend Complex operator-(const Complex& a, const Complex& b);
    friend Complex operator-(const Complex& a);
    friend Complex operator*(const Complex& a, const Complex& b);
    friend Complex operator/(const Complex& a, const Complex& b);
    friend Complex conj(const Complex& a);
    friend Complex mul(const Complex& a, const Real& s);
    friend Complex div_si(const Complex& a, long b);
    friend Complex mul_si(const Complex& a, long b);
    friend Real abs_sq(const Complex& a);          // |z|^2 as a ball
};

// Principal-branch transcendental functions.  All throw branch_error if the
// argument box touches the negative real axis (including 0).
Complex log_principal(const Complex& z);
Complex exp(const Complex& z);
Complex pow(const Complex& z, const Real& expo);   // z^e, exact real exponent
Complex arg_unit(const Real& theta);               // e^{i theta}

}  // namespace backflow
