#include "backflow/hyp2f1.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

// The hypergeometric function is evaluated by Taylor-series integration of
// the defining ODE  z(1-z) w'' + [c - (a+b+1) z] w' - a b w = 0  along a
// path from 0 that avoids the cut [1, inf): first a leg from the origin
// (where the Taylor coefficients are the ordinary series), then steps
// between exact waypoints, each a fraction of the local distance to the
// singularities {0, 1}.  Value and derivative are carried across steps.
//
// Everything is certified: midpoints are MPFR numbers at the working
// precision, each rounding is absorbed into a ball radius carried as an
// upward-biased long double, and series truncation adds an explicit tail
// bound derived from a contraction estimate on the coefficient recurrence.

namespace backflow {

namespace {

// ---------------------------------------------------------------- radius --
// Radii and magnitude bounds are carried in 80-bit long doubles.  Every
// operation result is inflated by kUp, which dominates the <= 2^-63 relative
// rounding error of extended-precision hardware arithmetic.
constexpr long double kUp = 1.0L + 0x1p-46L;

inline long double up(long double x) { return x * kUp; }
inline long double dn(long double x) { return x / kUp; }

inline void radd(long double& r, long double x) { r = (r + x) * kUp; }

// 2^e with the exponent clamped below: tiny exponents saturate to a still
// sound (merely pessimistic) 2^-16000.
inline long double ld_2exp(long e) {
    if (e < -16000) e = -16000;
    if (e > 16000) throw precision_error("hyp2f1: magnitude exceeds supported range");
    return ldexpl(1.0L, static_cast<int>(e));
}

inline long double ld_abs_up(mpfr_srcptr x) {
    if (mpfr_zero_p(x)) return 0.0L;
    long double v = fabsl(mpfr_get_ld(x, MPFR_RNDA));
    if (v > 0x1p12000L) throw precision_error("hyp2f1: magnitude exceeds supported range");
    return up(v);
}

inline long double ld_abs_dn(mpfr_srcptr x) {
    if (mpfr_zero_p(x)) return 0.0L;
    return dn(fabsl(mpfr_get_ld(x, MPFR_RNDZ)));
}

// ------------------------------------------------------------- C3 scalar --
// Complex disc ball: two MPFR midpoints + long double radius.
struct C3 {
    mpfr_t re, im;
    long double rad;
    mpfr_prec_t wp;

    explicit C3(mpfr_prec_t p) : rad(0), wp(p) {
        mpfr_init2(re, p);
        mpfr_init2(im, p);
        mpfr_set_zero(re, 1);
        mpfr_set_zero(im, 1);
    }
    ~C3() {
        mpfr_clear(re);
        mpfr_clear(im);
    }
    C3(const C3&) = delete;
    C3& operator=(const C3&) = delete;

    void set(const C3& o) {
        mpfr_set(re, o.re, MPFR_RNDN);  // same precision: exact
        mpfr_set(im, o.im, MPFR_RNDN);
        rad = o.rad;
    }
    void set_zero() {
        mpfr_set_zero(re, 1);
        mpfr_set_zero(im, 1);
        rad = 0;
    }
};

inline void c3_swap(C3& a, C3& b) {
    mpfr_swap(a.re, b.re);
    mpfr_swap(a.im, b.im);
    std::swap(a.rad, b.rad);
}

// Upper bound on |midpoint|.
inline long double mod_mid_up(const C3& x) {
    return up(hypotl(ld_abs_up(x.re), ld_abs_up(x.im)));
}
// Upper bound on |value| over the whole ball.
inline long double mod_up(const C3& x) { return up(mod_mid_up(x) + x.rad); }

// Fold one midpoint rounding (<= 1 ulp of the result) into the radius.
inline void bump(long double& rad, int tern, mpfr_srcptr out, mpfr_prec_t wp) {
    if (tern == 0 || mpfr_zero_p(out)) return;
    radd(rad, ld_2exp(mpfr_get_exp(out) - wp));
}

struct Scr {
    mpfr_t t1, t2, t3, t4;
    explicit Scr(mpfr_prec_t wp) { mpfr_inits2(wp, t1, t2, t3, t4, (mpfr_ptr)0); }
    ~Scr() { mpfr_clears(t1, t2, t3, t4, (mpfr_ptr)0); }
    Scr(const Scr&) = delete;
    Scr& operator=(const Scr&) = delete;
};

// d = a + b (aliasing allowed).
void c3_add(C3& d, const C3& a, const C3& b) {
    long double r = 0;
    radd(r, a.rad);
    radd(r, b.rad);
    int u1 = mpfr_add(d.re, a.re, b.re, MPFR_RNDN);
    int u2 = mpfr_add(d.im, a.im, b.im, MPFR_RNDN);
    bump(r, u1, d.re, d.wp);
    bump(r, u2, d.im, d.wp);
    d.rad = r;
}

// d = a - b (aliasing allowed).
void c3_sub(C3& d, const C3& a, const C3& b) {
    long double r = 0;
    radd(r, a.rad);
    radd(r, b.rad);
    int u1 = mpfr_sub(d.re, a.re, b.re, MPFR_RNDN);
    int u2 = mpfr_sub(d.im, a.im, b.im, MPFR_RNDN);
    bump(r, u1, d.re, d.wp);
    bump(r, u2, d.im, d.wp);
    d.rad = r;
}

// d = a * b; d must not alias a or b (a == b is fine).
void c3_mul(C3& d, const C3& a, const C3& b, Scr& s) {
    const long double ma = mod_mid_up(a), mb = mod_mid_up(b);
    long double r = 0;
    radd(r, up(ma * b.rad));
    radd(r, up(mb * a.rad));
    radd(r, up(a.rad * b.rad));
    int u1 = mpfr_mul(s.t1, a.re, b.re, MPFR_RNDN);
    int u2 = mpfr_mul(s.t2, a.im, b.im, MPFR_RNDN);
    int u3 = mpfr_mul(s.t3, a.re, b.im, MPFR_RNDN);
    int u4 = mpfr_mul(s.t4, a.im, b.re, MPFR_RNDN);
    bump(r, u1, s.t1, d.wp);
    bump(r, u2, s.t2, d.wp);
    bump(r, u3, s.t3, d.wp);
    bump(r, u4, s.t4, d.wp);
    int u5 = mpfr_sub(d.re, s.t1, s.t2, MPFR_RNDN);
    int u6 = mpfr_add(d.im, s.t3, s.t4, MPFR_RNDN);
    bump(r, u5, d.re, d.wp);
    bump(r, u6, d.im, d.wp);
    d.rad = r;
}

// d = a * q for a real ball (q, q_rad); aliasing d == a allowed.
void c3_scale(C3& d, const C3& a, mpfr_srcptr q, long double q_rad) {
    const long double ma = mod_mid_up(a), qa = ld_abs_up(q);
    long double r = 0;
    radd(r, up(qa * a.rad));
    radd(r, up((ma + a.rad) * q_rad));
    int u1 = mpfr_mul(d.re, a.re, q, MPFR_RNDN);
    int u2 = mpfr_mul(d.im, a.im, q, MPFR_RNDN);
    bump(r, u1, d.re, d.wp);
    bump(r, u2, d.im, d.wp);
    d.rad = r;
}

// d = a * n; aliasing allowed.
void c3_scale_ui(C3& d, const C3& a, unsigned long n) {
    long double r = up(a.rad * (long double)n);
    int u1 = mpfr_mul_ui(d.re, a.re, n, MPFR_RNDN);
    int u2 = mpfr_mul_ui(d.im, a.im, n, MPFR_RNDN);
    bump(r, u1, d.re, d.wp);
    bump(r, u2, d.im, d.wp);
    d.rad = r;
}

// d = a / q for a real ball (q, q_rad) with |q| - q_rad > 0; aliasing allowed.
void c3_div_real(C3& d, const C3& a, mpfr_srcptr q, long double q_rad) {
    const long double qdn = ld_abs_dn(q);
    const long double den = dn(qdn - up(q_rad));
    if (!(den > 0)) throw domain_error("hyp2f1: division by a real interval containing zero");
    const long double ma = mod_mid_up(a), qa = ld_abs_up(q);
    long double r = up((up(a.rad * qa) + up(ma * q_rad)) / dn(qdn * den));
    int u1 = mpfr_div(d.re, a.re, q, MPFR_RNDN);
    int u2 = mpfr_div(d.im, a.im, q, MPFR_RNDN);
    bump(r, u1, d.re, d.wp);
    bump(r, u2, d.im, d.wp);
    d.rad = r;
}

// d = a / n for integer n > 0; aliasing allowed.
void c3_div_ui(C3& d, const C3& a, unsigned long n) {
    long double r = up(a.rad / (long double)n);
    int u1 = mpfr_div_ui(d.re, a.re, n, MPFR_RNDN);
    int u2 = mpfr_div_ui(d.im, a.im, n, MPFR_RNDN);
    bump(r, u1, d.re, d.wp);
    bump(r, u2, d.im, d.wp);
    d.rad = r;
}

// d = a / b; d must not alias a or b.  Numerator and denominator are treated
// as independent balls (a superset of the true range, hence sound).
void c3_div(C3& d, const C3& a, const C3& b, Scr& s) {
    // numerator first: a * conj(b) consumes all the scratch registers
    C3 num(d.wp), bc(d.wp);
    mpfr_set(bc.re, b.re, MPFR_RNDN);
    mpfr_neg(bc.im, b.im, MPFR_RNDN);
    bc.rad = b.rad;
    c3_mul(num, a, bc, s);
    // denominator: real ball containing |b'|^2 for every b' in the b-ball
    int u1 = mpfr_sqr(s.t1, b.re, MPFR_RNDN);
    int u2 = mpfr_sqr(s.t2, b.im, MPFR_RNDN);
    long double q_rad = 0;
    bump(q_rad, u1, s.t1, d.wp);
    bump(q_rad, u2, s.t2, d.wp);
    int u3 = mpfr_add(s.t1, s.t1, s.t2, MPFR_RNDN);
    bump(q_rad, u3, s.t1, d.wp);
    const long double mb = mod_mid_up(b);
    radd(q_rad, up(2 * mb * b.rad));
    radd(q_rad, up(b.rad * b.rad));
    c3_div_real(d, num, s.t1, q_rad);
}

// ------------------------------------------------------------ parameters --
struct Par {
    mpfr_t a, b, c, ab, s_ab;  // exact copies; ab = a*b, s_ab = a+b
    long double aal, bal, cal;
    double add, bdd, cdd;  // |a|, |b| and *signed* c as doubles, for planning
    bool c_pos;

    Par(const Real& A, const Real& B, const Real& C, mpfr_prec_t wp) {
        mpfr_inits2(wp, a, b, c, ab, s_ab, (mpfr_ptr)0);
        int t1 = mpfr_set(a, A.mid(), MPFR_RNDN);
        int t2 = mpfr_set(b, B.mid(), MPFR_RNDN);
        int t3 = mpfr_set(c, C.mid(), MPFR_RNDN);
        int t4 = mpfr_mul(ab, a, b, MPFR_RNDN);
        int t5 = mpfr_add(s_ab, a, b, MPFR_RNDN);
        if (t1 || t2 || t3 || t4 || t5)
            throw precision_error("hyp2f1: parameters wider than the working precision");
        aal = ld_abs_up(a);
        bal = ld_abs_up(b);
        cal = ld_abs_up(c);
        add = std::fabs(mpfr_get_d(a, MPFR_RNDA));
        bdd = std::fabs(mpfr_get_d(b, MPFR_RNDA));
        cdd = mpfr_get_d(c, MPFR_RNDN);
        c_pos = mpfr_sgn(c) > 0;
    }
    ~Par() { mpfr_clears(a, b, c, ab, s_ab, (mpfr_ptr)0); }
    Par(const Par&) = delete;
    Par& operator=(const Par&) = delete;
};

// sup over k' >= k of (k' + p) / (k' + q) for p >= 0, valid when k + q > 0:
// the ratio is monotone in k' and tends to 1, so the sup is at k or 1.
inline long double sup_ratio(long double k, long double p, long double q) {
    long double v = up((k + p) / dn(k + q));
    return v > 1.0L ? v : 1.0L;
}

constexpr long kIterCap = 4000000;

// ------------------------------------------------- leg 1: series at z0=0 --
// w(h) = sum t_k, t_{k+1} = t_k * (k+a)(k+b) / ((k+1)(k+c)) * h.
// Tail: for k with k + qoff > 1 (qoff = c or -|c|), the term ratio from k
// on is bounded by r(k) = |h| sup[(k+a)/(k+c)] sup[(k+b)/(k+1)]; once
// r <= 0.9 and the running term is negligible, tail <= m_k r/(1-r) and the
// k-weighted tail (for the derivative) <= m_k (k r/(1-r) + r/(1-r)^2).
void origin_leg(const Par& par, const C3& h, C3& w_out, C3& wd_out, bool want_deriv,
                mpfr_prec_t wp) {
    Scr s(wp);
    C3 t(wp), tn(wp), tmp(wp), dk(wp), S(wp), D(wp);
    mpfr_set_ui(t.re, 1, MPFR_RNDN);
    t.rad = 0;
    S.set(t);
    D.set_zero();

    mpfr_t P, Q;  // P = (k+a)(k+b), Q = (k+1)(k+c)
    mpfr_init2(P, wp);
    mpfr_init2(Q, wp);
    mpfr_set(P, par.ab, MPFR_RNDN);
    mpfr_set(Q, par.c, MPFR_RNDN);
    long double p_rad = 0, q_rad = 0;

    const long double habs = mod_up(h);
    const long double qoff = par.c_pos ? par.cal : -par.cal;
    long double peak = 1.0L, mk = 1.0L;

    for (long k = 0;; ++k) {
        if (k > kIterCap) {
            mpfr_clears(P, Q, (mpfr_ptr)0);
            throw precision_error("hyp2f1: origin series did not converge");
        }
        if ((long double)k + qoff > 1.0L) {
            const long double r =
                up(habs * sup_ratio(k, par.aal, qoff) * sup_ratio(k, par.bal, 1.0L));
            if (r <= 0.9L && mk <= peak * ld_2exp(8 - (long)wp)) {
                const long double g = up(r / dn(1.0L - r));
                radd(S.rad, up(mk * g));
                if (want_deriv)
                    radd(D.rad, up(mk * ((long double)k * g + up(g / dn(1.0L - r)))));
                break;
            }
        }
        // t_{k+1} = t_k * P/Q * h
        c3_scale(tn, t, P, p_rad);
        c3_div_real(tn, tn, Q, q_rad);
        c3_mul(tmp, tn, h, s);
        c3_swap(tmp, tn);
        c3_add(S, S, tn);
        if (want_deriv) {
            c3_scale_ui(dk, tn, (unsigned long)(k + 1));
            c3_add(D, D, dk);
        }
        c3_swap(t, tn);
        mk = mod_up(t);
        if (mk > peak) peak = mk;
        // P += 2k+1 + (a+b);  Q += 2k+2 + c
        bump(p_rad, mpfr_add_si(P, P, 2 * k + 1, MPFR_RNDN), P, wp);
        bump(p_rad, mpfr_add(P, P, par.s_ab, MPFR_RNDN), P, wp);
        bump(q_rad, mpfr_add_si(Q, Q, 2 * k + 2, MPFR_RNDN), Q, wp);
        bump(q_rad, mpfr_add(Q, Q, par.c, MPFR_RNDN), Q, wp);
    }
    mpfr_clears(P, Q, (mpfr_ptr)0);

    w_out.set(S);
    if (want_deriv) {
        c3_div(tmp, D, h, s);
        wd_out.set(tmp);
    }
}

// ----------------------------------------- generic Taylor step at z0 != 0 --
// Terms t_k = c_k h^k obey
//   t_{k+2} = [B1 (k+a)(k+b) t_k / (k+1) - B2 ((1-2 z0) k + ct) t_{k+1}] / (k+2)
// with B1 = h^2/A, B2 = h/A, A = z0(1 - z0), ct = c - (a+b+1) z0.
// Contraction: |t_{k+2}| <= q1(k)|t_k| + q2(k)|t_{k+1}| with
//   q1(k) = |B1| (k+|a|)(k+|b|) / ((k+2)(k+1)),
//   q2(k) = |B2| (|1-2z0| k + |ct|) / (k+2),
// and the sup bounds over k' >= k close monotonically.  Once
// lambda = q1s + q2s <= 0.8 and the last two terms are small, the pairwise
// induction  max(|t_{K+2j}|, |t_{K+2j+1}|) <= lambda^j M  gives
//   value tail          <= 2 M lambda / (1 - lambda)
//   sum k|t_k| tail     <= M [(2K+1) lambda/(1-lambda) + 4 lambda/(1-lambda)^2].
void ode_step(const Par& par, double z0r, double z0i, const C3& h, C3& w, C3& wd,
              bool want_deriv, mpfr_prec_t wp) {
    Scr s(wp);

    // Step constants from the exact double expansion point; any rounding in
    // their construction is tracked through the C3 radii.
    C3 A(wp), u1c(wp), ct(wp);
    {
        C3 z0(wp), z0sq(wp);
        mpfr_set_d(z0.re, z0r, MPFR_RNDN);
        mpfr_set_d(z0.im, z0i, MPFR_RNDN);
        c3_mul(z0sq, z0, z0, s);
        c3_sub(A, z0, z0sq);
        // u1 = 1 - 2 z0
        bump(u1c.rad, mpfr_d_sub(u1c.re, 1.0, z0.re, MPFR_RNDN), u1c.re, wp);
        bump(u1c.rad, mpfr_sub(u1c.re, u1c.re, z0.re, MPFR_RNDN), u1c.re, wp);
        bump(u1c.rad, mpfr_mul_si(u1c.im, z0.im, -2, MPFR_RNDN), u1c.im, wp);
        // ct = c - (a+b+1) z0
        mpfr_t sab1;
        mpfr_init2(sab1, wp);
        long double sab1_rad = 0;
        bump(sab1_rad, mpfr_add_ui(sab1, par.s_ab, 1, MPFR_RNDN), sab1, wp);
        c3_scale(ct, z0, sab1, sab1_rad);
        C3 cc(wp);
        mpfr_set(cc.re, par.c, MPFR_RNDN);
        c3_sub(ct, cc, ct);
        mpfr_clear(sab1);
    }

    C3 B1(wp), B2(wp);
    c3_div(B2, h, A, s);
    c3_mul(B1, h, B2, s);

    // t0 = w, t1 = h * w'
    C3 tk(wp), tk1(wp), S(wp), D(wp);
    tk.set(w);
    c3_mul(tk1, h, wd, s);
    c3_add(S, tk, tk1);
    D.set(tk1);

    const long double b1m = mod_up(B1), b2m = mod_up(B2);
    const long double u1m = mod_up(u1c), ctm = mod_up(ct);
    long double mk = mod_up(tk), mk1 = mod_up(tk1);
    long double peak = mk > mk1 ? mk : mk1;

    mpfr_t P;  // (k+a)(k+b)
    mpfr_init2(P, wp);
    mpfr_set(P, par.ab, MPFR_RNDN);
    long double p_rad = 0;
    C3 L(wp);  // (1-2z0) k + ct
    L.set(ct);

    C3 u(wp), v(wp), uu(wp), vv(wp), tn(wp);
    for (long k = 0;; ++k) {
        if (k > kIterCap) {
            mpfr_clear(P);
            throw precision_error("hyp2f1: continuation series did not converge");
        }
        const long double q1s =
            up(b1m * sup_ratio(k, par.aal, 2.0L) * sup_ratio(k, par.bal, 1.0L));
        const long double asym = up(b2m * u1m);
        const long double q2k = up(b2m * up((u1m * k + ctm) / (k + 2.0L)));
        const long double lam = q1s + (q2k > asym ? q2k : asym);
        const long double thr = peak * ld_2exp(8 - (long)wp);
        if (lam <= 0.8L && mk <= thr && mk1 <= thr) {
            const long double M = mk > mk1 ? mk : mk1;
            const long double g = up(lam / dn(1.0L - lam));
            radd(S.rad, up(2.0L * M * g));
            if (want_deriv)
                radd(D.rad, up(M * ((2.0L * k + 1.0L) * g + 4.0L * up(g / dn(1.0L - lam)))));
            break;
        }
        // u = B1 * P * t_k / ((k+1)(k+2));  v = B2 * L * t_{k+1} / (k+2)
        c3_scale(u, tk, P, p_rad);
        c3_mul(uu, B1, u, s);
        c3_div_ui(uu, uu, (unsigned long)(k + 1) * (unsigned long)(k + 2));
        c3_mul(v, L, tk1, s);
        c3_mul(vv, B2, v, s);
        c3_div_ui(vv, vv, (unsigned long)(k + 2));
        c3_sub(tn, uu, vv);
        c3_add(S, S, tn);
        if (want_deriv) {
            c3_scale_ui(u, tn, (unsigned long)(k + 2));
            c3_add(D, D, u);
        }
        c3_swap(tk, tk1);
        c3_swap(tk1, tn);
        mk = mk1;
        mk1 = mod_up(tk1);
        if (mk1 > peak) peak = mk1;
        // P += 2k+1 + (a+b);  L += (1-2z0)
        bump(p_rad, mpfr_add_si(P, P, 2 * k + 1, MPFR_RNDN), P, wp);
        bump(p_rad, mpfr_add(P, P, par.s_ab, MPFR_RNDN), P, wp);
        c3_add(L, L, u1c);
    }
    mpfr_clear(P);

    w.set(S);
    if (want_deriv) {
        c3_div(tn, D, h, s);
        wd.set(tn);
    }
}

// ------------------------------------------------------------- path plan --
struct Plan {
    bool direct = false;
    std::vector<std::pair<double, double>> pts;
};

Plan make_plan(double zr, double zi) {
    Plan p;
    if (std::hypot(zr, zi) <= 0.72) {
        p.direct = true;
        return p;
    }
    double cr, ci;
    if (zi != 0.0) {
        cr = 0.0;
        ci = zi > 0 ? 0.5 : -0.5;
    } else {
        cr = zr > 0 ? 0.5 : -0.5;
        ci = 0.0;
    }
    p.pts.emplace_back(cr, ci);
    for (int it = 0; it < 512; ++it) {
        const double dr = zr - cr, di = zi - ci;
        const double dist = std::hypot(dr, di);
        const double dmin = std::min(std::hypot(cr, ci), std::hypot(cr - 1.0, ci));
        if (dist <= 0.30 * dmin) return p;
        const double f = 0.285 * dmin / dist;
        cr += dr * f;
        ci += di * f;
        p.pts.emplace_back(cr, ci);
    }
    throw precision_error("hyp2f1: continuation path failed to reach the argument");
}

// Working-precision guard for the cancellation incurred by the series legs:
// walk the term-magnitude profile of the origin series in doubles and add
// mild headroom for the continuation legs.
long estimate_guard(const Par& par, double h0) {
    double lr = 0, mx = 0;
    const double lim = 4 * (par.add + par.bdd + std::fabs(par.cdd)) + 4000;
    for (long k = 0; k < 400000; ++k) {
        const double num = (k + par.add) * (k + par.bdd);
        double den = (k + 1.0) * std::fabs(k + par.cdd);
        if (den < 1) den = 1;
        const double r = h0 * num / den;
        lr += std::log10(r + 1e-300);
        if (lr > mx) mx = lr;
        if (r < 0.95 && lr < mx - 40) break;
        if (k > lim) break;
    }
    return (long)(mx + 0.03 * (par.add + par.bdd)) + 12;
}

// One full evaluation attempt at working precision wp.
void eval_once(const Real& a, const Real& b, const Real& c, const Complex& z, const Plan& plan,
               mpfr_prec_t wp, C3& out) {
    Par par(a, b, c, wp);
    C3 h(wp), w(wp), wd(wp);

    auto set_ball_h = [&](double fromr, double fromi) {
        h.rad = 0;
        bump(h.rad, mpfr_set(h.re, z.re.mid(), MPFR_RNDN), h.re, wp);
        bump(h.rad, mpfr_set(h.im, z.im.mid(), MPFR_RNDN), h.im, wp);
        if (fromr != 0.0) bump(h.rad, mpfr_sub_d(h.re, h.re, fromr, MPFR_RNDN), h.re, wp);
        if (fromi != 0.0) bump(h.rad, mpfr_sub_d(h.im, h.im, fromi, MPFR_RNDN), h.im, wp);
        radd(h.rad, up(ld_abs_up(z.re.rad()) + ld_abs_up(z.im.rad())));
    };

    if (plan.direct) {
        set_ball_h(0.0, 0.0);
        origin_leg(par, h, w, wd, false, wp);
    } else {
        mpfr_set_d(h.re, plan.pts[0].first, MPFR_RNDN);
        mpfr_set_d(h.im, plan.pts[0].second, MPFR_RNDN);
        h.rad = 0;
        origin_leg(par, h, w, wd, true, wp);
        for (size_t i = 1; i < plan.pts.size(); ++i) {
            mpfr_set_d(h.re, plan.pts[i].first, MPFR_RNDN);
            mpfr_set_d(h.im, plan.pts[i].second, MPFR_RNDN);
            mpfr_sub_d(h.re, h.re, plan.pts[i - 1].first, MPFR_RNDN);   // exact
            mpfr_sub_d(h.im, h.im, plan.pts[i - 1].second, MPFR_RNDN);  // exact
            h.rad = 0;
            ode_step(par, plan.pts[i - 1].first, plan.pts[i - 1].second, h, w, wd, true, wp);
        }
        set_ball_h(plan.pts.back().first, plan.pts.back().second);
        ode_step(par, plan.pts.back().first, plan.pts.back().second, h, w, wd, false, wp);
    }
    out.set(w);
}

Complex c3_to_complex(const C3& x, mpfr_prec_t wp) {
    Real re(wp), im(wp);
    mpfr_set(re.mid_rw(), x.re, MPFR_RNDN);
    mpfr_set(im.mid_rw(), x.im, MPFR_RNDN);
    Real rr(64);
    mpfr_set_ld(rr.mid_rw(), x.rad, MPFR_RNDU);
    re.add_error(rr);
    im.add_error(rr);
    return Complex(std::move(re), std::move(im));
}

}  // namespace

Complex hyp2f1(const Real& a, const Real& b, const Real& c, const Complex& z, long digits) {
    if (!a.is_exact() || !b.is_exact() || !c.is_exact())
        throw domain_error("hyp2f1: parameters must be exact");
    if (mpfr_sgn(c.mid()) <= 0 && mpfr_integer_p(c.mid()))
        throw domain_error("hyp2f1: c is a nonpositive integer");
    if (digits < 10) digits = 10;

    // cut check: the argument box must not touch [1, inf)
    if (z.im.contains_zero() && z.re.upper_d() >= 1.0)
        throw branch_error("hyp2f1: argument box touches the cut [1, inf)");

    const double zr = z.re.mid_d(), zi = z.im.mid_d();
    if (!std::isfinite(zr) || !std::isfinite(zi))
        throw domain_error("hyp2f1: argument not finite");
    const Plan plan = make_plan(zr, zi);

    long guard;
    {
        const mpfr_prec_t pg =
            std::max<mpfr_prec_t>(192, a.prec() + b.prec() + c.prec() + 16);
        Par p0(a, b, c, pg);
        guard = estimate_guard(p0, plan.direct ? std::hypot(zr, zi) : 0.5);
    }

    mpfr_prec_t wp = bits_for_digits(digits + guard) + 32;
    for (int attempt = 0; attempt < 4; ++attempt, wp *= 2) {
        C3 out(wp);
        eval_once(a, b, c, z, plan, wp, out);
        const long double target = powl(10.0L, (long double)-digits) * (mod_mid_up(out) + 1.0L);
        if (out.rad <= target) return c3_to_complex(out, wp);
    }
    throw precision_error("hyp2f1: requested width unachievable (argument radius too large?)");
}

Complex incomplete_beta(const Real& mu, const Real& nu, const Complex& z, long digits) {
    if (!mu.is_exact() || !nu.is_exact())
        throw domain_error("incomplete_beta: parameters must be exact");
    if (mpfr_sgn(mu.mid()) <= 0) throw domain_error("incomplete_beta: mu must be positive");
    if (digits < 10) digits = 10;

    const mpfr_prec_t pp = std::max({mu.prec(), nu.prec(), (mpfr_prec_t)192}) + 16;
    const Real one = Real::of_si(1, pp);
    const Real bpar = one - nu;  // exact: nu is exact and pp exceeds its precision
    const Real cpar = mu + one;
    if (!bpar.is_exact() || !cpar.is_exact())
        throw precision_error("incomplete_beta: parameter arithmetic exceeded the guard precision");

    for (int attempt = 0; attempt < 3; ++attempt) {
        const long d = (digits + 8) << attempt;
        const mpfr_prec_t wp = bits_for_digits(d) + 16;
        const Complex zz(z.re + Real(wp), z.im + Real(wp));
        const Complex f = hyp2f1(mu, bpar, cpar, zz, d);
        const Complex zmu = pow(zz, mu);  // principal branch; throws off the domain
        const Real inv_mu = one / mu;
        const Complex r = mul(zmu * f, inv_mu);
        const double scale = r.abs_upper(64).mid_d() + 1.0;
        if (r.rad_d() <= std::pow(10.0, (double)-digits) * scale) return r;
    }
    throw precision_error("incomplete_beta: requested width unachievable");
}

}  // namespace backflow
