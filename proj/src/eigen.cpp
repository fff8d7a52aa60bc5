#include "backflow/eigen.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "backflow/errors.hpp"

namespace backflow {

long internal_solve_digits(long solver_digits, int dim) {
    return solver_digits + static_cast<long>(std::ceil(0.47 * dim)) + 25;
}

namespace {

// Contiguous array of mpfr numbers at one precision (mpfr_t cannot live in a
// std::vector directly; __mpfr_struct can, as long as the vector never
// reallocates after init).
class mvec {
  public:
    mvec(std::size_t n, mpfr_prec_t p) : v_(n) {
        for (auto& x : v_) mpfr_init2(&x, p);
    }
    ~mvec() {
        for (auto& x : v_) mpfr_clear(&x);
    }
    mvec(const mvec&) = delete;
    mvec& operator=(const mvec&) = delete;
    mpfr_ptr operator[](std::size_t i) { return &v_[i]; }
    mpfr_srcptr operator[](std::size_t i) const { return &v_[i]; }
    std::size_t size() const { return v_.size(); }

  private:
    std::vector<__mpfr_struct> v_;
};

constexpr mpfr_rnd_t RN = MPFR_RNDN;

// log2 upper bound of |x| (loose by < 1); very small stand-in for zero.
double log2_abs(mpfr_srcptr x) {
    if (mpfr_zero_p(x)) return -1.0e9;
    return static_cast<double>(mpfr_get_exp(x));
}

// The incremental real symmetric-definite ladder: grows (A, B) one row at a
// time, maintaining B = L L^T and S = L^-1 A L^-T on the leading block.
struct RealLadder {
    mpfr_prec_t prec;
    int cap = 0;
    int n = 0;
    mvec A, B, L, S;

    RealLadder(int cap_, mpfr_prec_t prec_)
        : prec(prec_),
          cap(cap_),
          A(static_cast<std::size_t>(cap_) * cap_, prec_),
          B(static_cast<std::size_t>(cap_) * cap_, prec_),
          L(static_cast<std::size_t>(cap_) * cap_, prec_),
          S(static_cast<std::size_t>(cap_) * cap_, prec_) {}

    mpfr_ptr a(int i, int j) { return A[static_cast<std::size_t>(i) * cap + j]; }
    mpfr_ptr b(int i, int j) { return B[static_cast<std::size_t>(i) * cap + j]; }
    mpfr_ptr l(int i, int j) { return L[static_cast<std::size_t>(i) * cap + j]; }
    mpfr_ptr s(int i, int j) { return S[static_cast<std::size_t>(i) * cap + j]; }

    void extend(const std::vector<Real>& a_row, const std::vector<Real>& b_row) {
        const int r = n;
        if (r >= cap) throw domain_error("ladder capacity exceeded");
        if (a_row.size() != static_cast<std::size_t>(r + 1) || b_row.size() != a_row.size())
            throw domain_error("ladder row length mismatch");
        for (int j = 0; j <= r; ++j) {
            mpfr_set(a(r, j), a_row[j].mid(), RN);
            mpfr_set(a(j, r), a(r, j), RN);
            mpfr_set(b(r, j), b_row[j].mid(), RN);
            mpfr_set(b(j, r), b(r, j), RN);
        }

        mvec t(2, prec);
        // Cholesky: new row of L.
        for (int j = 0; j < r; ++j) {
            mpfr_set(t[0], b(r, j), RN);
            for (int k = 0; k < j; ++k) {
                mpfr_mul(t[1], l(r, k), l(j, k), RN);
                mpfr_sub(t[0], t[0], t[1], RN);
            }
            mpfr_div(l(r, j), t[0], l(j, j), RN);
        }
        mpfr_set(t[0], b(r, r), RN);
        for (int k = 0; k < r; ++k) {
            mpfr_sqr(t[1], l(r, k), RN);
            mpfr_sub(t[0], t[0], t[1], RN);
        }
        if (mpfr_sgn(t[0]) <= 0) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "Cholesky breakdown at pivot %d: overlap matrix not positive definite "
                          "at working precision -- precision insufficient for this N",
                          r);
            throw precision_error(msg);
        }
        mpfr_sqrt(l(r, r), t[0], RN);

        // S extension.
        if (r == 0) {
            mpfr_div(s(0, 0), a(0, 0), b(0, 0), RN);
        } else {
            mvec y(static_cast<std::size_t>(r), prec), sv(static_cast<std::size_t>(r), prec);
            // Forward solve L_head y = A[0..r-1][r].
            for (int i = 0; i < r; ++i) {
                mpfr_set(y[i], a(i, r), RN);
                for (int k = 0; k < i; ++k) {
                    mpfr_mul(t[0], l(i, k), y[k], RN);
                    mpfr_sub(y[i], y[i], t[0], RN);
                }
                mpfr_div(y[i], y[i], l(i, i), RN);
            }
            // sv = S_head * l_row.
            for (int i = 0; i < r; ++i) {
                mpfr_set_zero(sv[i], 1);
                for (int k = 0; k < r; ++k) {
                    mpfr_mul(t[0], s(i, k), l(r, k), RN);
                    mpfr_add(sv[i], sv[i], t[0], RN);
                }
            }
            // New column and corner.
            for (int i = 0; i < r; ++i) {
                mpfr_sub(t[0], y[i], sv[i], RN);
                mpfr_div(t[0], t[0], l(r, r), RN);
                mpfr_set(s(i, r), t[0], RN);
                mpfr_set(s(r, i), t[0], RN);
            }
            mpfr_set(t[0], a(r, r), RN);
            for (int k = 0; k < r; ++k) {
                mpfr_mul_2si(t[1], y[k], 1, RN);
                mpfr_sub(t[1], t[1], sv[k], RN);
                mpfr_mul(t[1], t[1], l(r, k), RN);
                mpfr_sub(t[0], t[0], t[1], RN);
            }
            mpfr_sqr(t[1], l(r, r), RN);
            mpfr_div(s(r, r), t[0], t[1], RN);
        }
        n = r + 1;
    }

    // Frobenius norm of the current S block (upper bound flavor: plain RNDN
    // evaluation; used only for scaling thresholds and slack estimates).
    void fnorm_s(mpfr_ptr out) const {
        mvec t(1, prec);
        mpfr_set_zero(out, 1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                mpfr_sqr(t[0], const_cast<RealLadder*>(this)->s(i, j), RN);
                mpfr_add(out, out, t[0], RN);
            }
        mpfr_sqrt(out, out, RN);
    }
};

// --- Tridiagonal machinery -------------------------------------------------

// Householder tridiagonalization of the symmetric matrix held in W (k x k,
// row-major in an mvec of stride k).  On return d (k) and e (k-1) hold the
// tridiagonal; reflector vectors remain in W's subdiagonal columns with
// scalars in tau for the back-transform.
void tridiagonalize(mvec& W, int k, mpfr_prec_t prec, mvec& d, mvec& e, mvec& tau) {
    auto w = [&](int i, int j) -> mpfr_ptr { return W[static_cast<std::size_t>(i) * k + j]; };
    mvec t(3, prec);
    mvec p(static_cast<std::size_t>(k), prec), vv(static_cast<std::size_t>(k), prec);
    for (int c = 0; c + 2 < k; ++c) {
        // sum2 = sum of squares strictly below the first subdiagonal entry.
        mpfr_set_zero(t[0], 1);  // full sum
        mpfr_set_zero(t[1], 1);  // tail sum (rows c+2..)
        for (int i = c + 1; i < k; ++i) {
            mpfr_sqr(t[2], w(i, c), RN);
            mpfr_add(t[0], t[0], t[2], RN);
            if (i > c + 1) mpfr_add(t[1], t[1], t[2], RN);
        }
        if (mpfr_zero_p(t[0])) {
            mpfr_set_zero(tau[c], 1);
            mpfr_set_zero(e[c], 1);
            mpfr_set(d[c], w(c, c), RN);
            continue;
        }
        mpfr_sqrt(t[2], t[0], RN);  // sigma
        if (mpfr_sgn(w(c + 1, c)) >= 0) mpfr_neg(t[2], t[2], RN);
        mpfr_set(e[c], t[2], RN);  // alpha
        // v0 = x0 - alpha (no cancellation: alpha has the opposite sign).
        mpfr_sub(w(c + 1, c), w(c + 1, c), t[2], RN);
        // v^T v = tail + v0^2.
        mpfr_sqr(t[2], w(c + 1, c), RN);
        mpfr_add(t[2], t[2], t[1], RN);
        mpfr_ui_div(tau[c], 2, t[2], RN);  // tau = 2 / v^T v

        // p = tau * W_trail v over rows c+1..k-1.
        for (int i = c + 1; i < k; ++i) {
            mpfr_set_zero(p[i], 1);
            for (int j = c + 1; j < k; ++j) {
                mpfr_mul(t[2], w(i, j), w(j, c), RN);
                mpfr_add(p[i], p[i], t[2], RN);
            }
            mpfr_mul(p[i], p[i], tau[c], RN);
        }
        // K = (tau/2) v^T p;  w_vec = p - K v.
        mpfr_set_zero(t[0], 1);
        for (int i = c + 1; i < k; ++i) {
            mpfr_mul(t[2], w(i, c), p[i], RN);
            mpfr_add(t[0], t[0], t[2], RN);
        }
        mpfr_mul(t[0], t[0], tau[c], RN);
        mpfr_div_2ui(t[0], t[0], 1, RN);
        for (int i = c + 1; i < k; ++i) {
            mpfr_mul(t[2], t[0], w(i, c), RN);
            mpfr_sub(vv[i], p[i], t[2], RN);
        }
        // Trailing block update: W -= v w^T + w v^T.
        for (int i = c + 1; i < k; ++i)
            for (int j = c + 1; j < k; ++j) {
                mpfr_mul(t[2], w(i, c), vv[j], RN);
                mpfr_sub(w(i, j), w(i, j), t[2], RN);
                mpfr_mul(t[2], vv[i], w(j, c), RN);
                mpfr_sub(w(i, j), w(i, j), t[2], RN);
            }
        mpfr_set(d[c], w(c, c), RN);
    }
    if (k >= 2) {
        mpfr_set(d[k - 2], w(k - 2, k - 2), RN);
        mpfr_set(e[k - 2], w(k - 1, k - 2), RN);
    }
    mpfr_set(d[k - 1], w(k - 1, k - 1), RN);
}

// Apply the accumulated reflectors to a vector: z := (H_0 H_1 ... ) z.
void back_transform(const mvec& W, const mvec& tau, int k, mpfr_prec_t prec, mvec& z) {
    auto w = [&](int i, int j) -> mpfr_srcptr { return W[static_cast<std::size_t>(i) * k + j]; };
    mvec t(2, prec);
    for (int c = k - 3; c >= 0; --c) {
        if (mpfr_zero_p(tau[c])) continue;
        mpfr_set_zero(t[0], 1);
        for (int i = c + 1; i < k; ++i) {
            mpfr_mul(t[1], w(i, c), z[i], RN);
            mpfr_add(t[0], t[0], t[1], RN);
        }
        mpfr_mul(t[0], t[0], tau[c], RN);
        for (int i = c + 1; i < k; ++i) {
            mpfr_mul(t[1], t[0], w(i, c), RN);
            mpfr_sub(z[i], z[i], t[1], RN);
        }
    }
}

// Number of eigenvalues of the tridiagonal (d, e) strictly below x.
int sturm_count(const mvec& d, const mvec& e, int k, mpfr_srcptr x, mpfr_ptr q, mpfr_ptr t,
                mpfr_srcptr pivmin) {
    int cnt = 0;
    mpfr_sub(q, d[0], x, RN);
    if (mpfr_zero_p(q)) mpfr_neg(q, pivmin, RN);
    if (mpfr_sgn(q) < 0) ++cnt;
    for (int i = 1; i < k; ++i) {
        mpfr_sqr(t, e[i - 1], RN);
        mpfr_div(t, t, q, RN);
        mpfr_sub(q, d[i], x, RN);
        mpfr_sub(q, q, t, RN);
        if (mpfr_zero_p(q)) mpfr_neg(q, pivmin, RN);
        if (mpfr_sgn(q) < 0) ++cnt;
    }
    return cnt;
}

// Bisect eigenvalue of ascending index idx into [lo, hi] (preallocated mpfr
// at working precision); returns the final half width exponent via the
// interval itself.
void bisect_eigenvalue(const mvec& d, const mvec& e, int k, int idx, mpfr_ptr lo, mpfr_ptr hi,
                       mpfr_prec_t prec) {
    mvec t(4, prec);
    // Gershgorin bounds.
    for (int i = 0; i < k; ++i) {
        mpfr_set_zero(t[0], 1);
        if (i > 0) {
            mpfr_abs(t[1], e[i - 1], RN);
            mpfr_add(t[0], t[0], t[1], RN);
        }
        if (i + 1 < k) {
            mpfr_abs(t[1], e[i], RN);
            mpfr_add(t[0], t[0], t[1], RN);
        }
        mpfr_sub(t[1], d[i], t[0], RN);
        mpfr_add(t[2], d[i], t[0], RN);
        if (i == 0) {
            mpfr_set(lo, t[1], RN);
            mpfr_set(hi, t[2], RN);
        } else {
            if (mpfr_cmp(t[1], lo) < 0) mpfr_set(lo, t[1], RN);
            if (mpfr_cmp(t[2], hi) > 0) mpfr_set(hi, t[2], RN);
        }
    }
    // Scale for pivmin and target width.
    mpfr_abs(t[0], lo, RN);
    mpfr_abs(t[1], hi, RN);
    if (mpfr_cmp(t[1], t[0]) > 0) mpfr_set(t[0], t[1], RN);
    mpfr_add_ui(t[0], t[0], 1, RN);  // scale >= 1
    mvec pivmin(1, prec), width(1, prec);
    mpfr_mul_2si(pivmin[0], t[0], -2 * static_cast<long>(prec), RN);
    mpfr_mul_2si(width[0], t[0], -(static_cast<long>(prec) - 40), RN);

    long iters = 2 * static_cast<long>(prec);
    while (iters-- > 0) {
        mpfr_sub(t[2], hi, lo, RN);
        if (mpfr_cmp(t[2], width[0]) <= 0) break;
        mpfr_add(t[3], lo, hi, RN);
        mpfr_div_2ui(t[3], t[3], 1, RN);
        if (mpfr_cmp(t[3], lo) <= 0 || mpfr_cmp(t[3], hi) >= 0) break;  // resolution floor
        int c = sturm_count(d, e, k, t[3], t[0], t[1], pivmin[0]);
        if (c >= idx + 1)
            mpfr_set(hi, t[3], RN);
        else
            mpfr_set(lo, t[3], RN);
    }
}

// Inverse iteration on the tridiagonal (d, e) at shift theta.  z (length k)
// receives a unit eigenvector estimate.
void tridiag_inverse_iteration(const mvec& d, const mvec& e, int k, mpfr_srcptr theta,
                               mpfr_prec_t prec, mvec& z) {
    if (k == 1) {
        mpfr_set_ui(z[0], 1, RN);
        return;
    }
    mvec dl(static_cast<std::size_t>(k - 1), prec), dd(static_cast<std::size_t>(k), prec),
        du(static_cast<std::size_t>(k - 1), prec), du2(static_cast<std::size_t>(std::max(k - 2, 1)), prec);
    std::vector<int> piv(static_cast<std::size_t>(k - 1), 0);
    mvec t(3, prec), pivmin(1, prec);

    // Scale-based pivot floor.
    mpfr_set_ui(t[0], 1, RN);
    for (int i = 0; i < k; ++i) {
        mpfr_abs(t[1], d[i], RN);
        if (mpfr_cmp(t[1], t[0]) > 0) mpfr_set(t[0], t[1], RN);
    }
    mpfr_mul_2si(pivmin[0], t[0], -2 * static_cast<long>(prec), RN);

    for (int i = 0; i < k; ++i) mpfr_sub(dd[i], d[i], theta, RN);
    for (int i = 0; i < k - 1; ++i) {
        mpfr_set(dl[i], e[i], RN);
        mpfr_set(du[i], e[i], RN);
    }
    for (int i = 0; i < k - 2; ++i) mpfr_set_zero(du2[i], 1);

    // LU with partial pivoting (tridiagonal).
    for (int i = 0; i < k - 1; ++i) {
        mpfr_abs(t[0], dd[i], RN);
        mpfr_abs(t[1], dl[i], RN);
        if (mpfr_cmp(t[0], t[1]) >= 0) {
            if (mpfr_zero_p(dd[i])) mpfr_set(dd[i], pivmin[0], RN);
            mpfr_div(t[2], dl[i], dd[i], RN);
            mpfr_set(dl[i], t[2], RN);
            mpfr_mul(t[2], dl[i], du[i], RN);
            mpfr_sub(dd[i + 1], dd[i + 1], t[2], RN);
            piv[i] = 0;
        } else {
            mpfr_div(t[2], dd[i], dl[i], RN);
            mpfr_set(dd[i], dl[i], RN);
            mpfr_set(dl[i], t[2], RN);
            mpfr_set(t[0], du[i], RN);
            mpfr_set(du[i], dd[i + 1], RN);
            mpfr_mul(t[1], dl[i], dd[i + 1], RN);
            mpfr_sub(dd[i + 1], t[0], t[1], RN);
            if (i < k - 2) {
                mpfr_set(du2[i], du[i + 1], RN);
                mpfr_mul(du[i + 1], dl[i], du[i + 1], RN);
                mpfr_neg(du[i + 1], du[i + 1], RN);
            }
            piv[i] = 1;
        }
    }
    if (mpfr_zero_p(dd[k - 1])) mpfr_set(dd[k - 1], pivmin[0], RN);

    // Deterministic start vector.
    for (int i = 0; i < k; ++i) mpfr_set_d(z[i], 1.0 + 0.4 * std::sin(1.7 * (i + 1)), RN);

    for (int pass = 0; pass < 3; ++pass) {
        // Forward substitution with pivoting.
        for (int i = 0; i < k - 1; ++i) {
            if (piv[i] == 0) {
                mpfr_mul(t[0], dl[i], z[i], RN);
                mpfr_sub(z[i + 1], z[i + 1], t[0], RN);
            } else {
                mpfr_set(t[1], z[i], RN);
                mpfr_set(z[i], z[i + 1], RN);
                mpfr_mul(t[0], dl[i], z[i], RN);
                mpfr_sub(z[i + 1], t[1], t[0], RN);
            }
        }
        // Backward substitution.
        mpfr_div(z[k - 1], z[k - 1], dd[k - 1], RN);
        if (k >= 2) {
            mpfr_mul(t[0], du[k - 2], z[k - 1], RN);
            mpfr_sub(t[0], z[k - 2], t[0], RN);
            mpfr_div(z[k - 2], t[0], dd[k - 2], RN);
        }
        for (int i = k - 3; i >= 0; --i) {
            mpfr_mul(t[0], du[i], z[i + 1], RN);
            mpfr_sub(t[0], z[i], t[0], RN);
            mpfr_mul(t[1], du2[i], z[i + 2], RN);
            mpfr_sub(t[0], t[0], t[1], RN);
            mpfr_div(z[i], t[0], dd[i], RN);
        }
        // Normalize.
        mpfr_set_zero(t[0], 1);
        for (int i = 0; i < k; ++i) {
            mpfr_sqr(t[1], z[i], RN);
            mpfr_add(t[0], t[0], t[1], RN);
        }
        mpfr_sqrt(t[0], t[0], RN);
        for (int i = 0; i < k; ++i) mpfr_div(z[i], z[i], t[0], RN);
    }
}

}  // namespace

// --- PencilLadder ------------------------------------------------------------

struct PencilLadder::Impl {
    const MatrixPair* pair;
    bool dbl;
    long digits;
    mpfr_prec_t prec;
    RealLadder lad;
    int logical_n = 0;

    // Cached Gram-minimum data per real dimension (for slack estimates).
    int minb_dim = -1;
    double minb_lower_log2 = 0.0;
    Real minb_ball{64};

    Impl(const MatrixPair& p, long internal_digits)
        : pair(&p),
          dbl(p.complex_mode),
          digits(internal_digits),
          prec(bits_for_digits(internal_digits)),
          lad(p.complex_mode ? 2 * p.dim : p.dim, bits_for_digits(internal_digits)) {}

    void extend_to(int target) {
        if (target > pair->dim) throw domain_error("extend_to beyond pair dimension");
        for (int r = logical_n; r < target; ++r) {
            if (!dbl) {
                std::vector<Real> ar, br;
                ar.reserve(r + 1);
                br.reserve(r + 1);
                for (int j = 0; j <= r; ++j) {
                    ar.push_back(pair->A(r, j).re);
                    br.push_back(pair->B(r, j));
                }
                lad.extend(ar, br);
            } else {
                const Real zero = Real::of_si(0, 64);
                std::vector<Real> ar, br;
                ar.reserve(2 * r + 1);
                br.reserve(2 * r + 1);
                // Real row 2r: [2j] = Re A(r,j), [2j+1] = -Im A(r,j), [2r] = Re A(r,r).
                for (int j = 0; j < r; ++j) {
                    ar.push_back(pair->A(r, j).re);
                    ar.push_back(-pair->A(r, j).im);
                    br.push_back(pair->B(r, j));
                    br.push_back(zero);
                }
                ar.push_back(pair->A(r, r).re);
                br.push_back(pair->B(r, r));
                lad.extend(ar, br);
                // Real row 2r+1: [2j] = Im A(r,j), [2j+1] = Re A(r,j),
                //                [2r] = 0 (Hermitian diagonal), [2r+1] = Re A(r,r).
                ar.clear();
                br.clear();
                for (int j = 0; j < r; ++j) {
                    ar.push_back(pair->A(r, j).im);
                    ar.push_back(pair->A(r, j).re);
                    br.push_back(zero);
                    br.push_back(pair->B(r, j));
                }
                ar.push_back(zero);
                br.push_back(zero);
                ar.push_back(pair->A(r, r).re);
                br.push_back(pair->B(r, r));
                lad.extend(ar, br);
            }
        }
        logical_n = target;
    }

    // Tridiagonalize B's leading block and bisect its smallest eigenvalue.
    // Returns the ball (width + reduction + counting slack; no Weyl term).
    void ensure_minb() {
        if (minb_dim == lad.n) return;
        const int k = lad.n;
        mvec W(static_cast<std::size_t>(k) * k, prec);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                mpfr_set(W[static_cast<std::size_t>(i) * k + j], lad.b(i, j), RN);
        mvec d(static_cast<std::size_t>(k), prec), e(static_cast<std::size_t>(std::max(k - 1, 1)), prec),
            tau(static_cast<std::size_t>(k), prec);
        tridiagonalize(W, k, prec, d, e, tau);
        mvec lo(1, prec), hi(1, prec);
        bisect_eigenvalue(d, e, k, 0, lo[0], hi[0], prec);
        Real ball = Real::of_interval(lo[0], hi[0], 160);
        // Slack: orthogonal-reduction forward error (n^2 scale) and Sturm
        // rounding; ||B||_F <= n for this Gram family (entries in [0, 1]).
        double log2n = std::log2(static_cast<double>(k) + 1.0);
        double log2_bnorm = log2n;  // ||B||_F <= n
        double red = 2 * log2n + 5.0 - static_cast<double>(prec) + log2_bnorm;
        double stu = log2n + 10.0 - static_cast<double>(prec) + log2_bnorm;
        long slack = static_cast<long>(std::ceil(std::max(red, stu))) + 2;
        ball.add_error_2exp(slack);
        minb_ball = ball;
        // Lower endpoint exponent for kappa(L) slack estimates.
        mvec low(1, 160);
        ball.lower(low[0]);
        if (mpfr_sgn(low[0]) <= 0)
            minb_lower_log2 = -4.0 * static_cast<double>(prec);  // pessimistic fallback
        else
            minb_lower_log2 = log2_abs(low[0]) - 1.0;
        minb_dim = lad.n;
    }

    // Radius exponent for an eigenvalue obtained from the tridiagonal of S.
    long eigen_slack_exp(double extra_log2) {
        ensure_minb();
        const int k = lad.n;
        mvec fn(1, prec);
        lad.fnorm_s(fn[0]);
        double log2s = std::max(0.0, log2_abs(fn[0]));
        double log2n = std::log2(static_cast<double>(k) + 1.0);
        double kappa = 0.5 * (log2n - minb_lower_log2);  // log2 ||L|| ||L^-1||
        double red = 2 * log2n + kappa + 4.0 - static_cast<double>(prec) + log2s;
        double tri = 2 * log2n + 5.0 - static_cast<double>(prec) + log2s;
        double stu = log2n + 10.0 - static_cast<double>(prec) + log2s;
        double m = std::max(std::max(red, tri), std::max(stu, extra_log2));
        return static_cast<long>(std::ceil(m)) + 2;
    }

    // Shared: from an S-eigenvector y (unit), build the B-normalized pencil
    // vector, its residual, and check the residual tolerance.
    void finish_vector(const mvec& y, mpfr_srcptr theta, long residual_tol_log10,
                       std::vector<Real>& coeffs, double& resid_out) {
        const int k = lad.n;
        mvec v(static_cast<std::size_t>(k), prec), t(3, prec);
        // Solve L^T v = y.
        for (int i = k - 1; i >= 0; --i) {
            mpfr_set(v[i], y[i], RN);
            for (int j = i + 1; j < k; ++j) {
                mpfr_mul(t[0], lad.l(j, i), v[j], RN);
                mpfr_sub(v[i], v[i], t[0], RN);
            }
            mpfr_div(v[i], v[i], lad.l(i, i), RN);
        }
        // B-normalize.
        mvec bv(static_cast<std::size_t>(k), prec);
        for (int i = 0; i < k; ++i) {
            mpfr_set_zero(bv[i], 1);
            for (int j = 0; j < k; ++j) {
                mpfr_mul(t[0], lad.b(i, j), v[j], RN);
                mpfr_add(bv[i], bv[i], t[0], RN);
            }
        }
        mpfr_set_zero(t[1], 1);
        for (int i = 0; i < k; ++i) {
            mpfr_mul(t[0], v[i], bv[i], RN);
            mpfr_add(t[1], t[1], t[0], RN);
        }
        if (mpfr_sgn(t[1]) <= 0)
            throw precision_error("eigenvector normalization failed: v^T B v <= 0 at working precision");
        mpfr_sqrt(t[1], t[1], RN);
        for (int i = 0; i < k; ++i) mpfr_div(v[i], v[i], t[1], RN);
        // Pencil residual r = A v - theta B v.
        mvec r(static_cast<std::size_t>(k), prec);
        for (int i = 0; i < k; ++i) {
            mpfr_set_zero(r[i], 1);
            for (int j = 0; j < k; ++j) {
                mpfr_mul(t[0], lad.a(i, j), v[j], RN);
                mpfr_add(r[i], r[i], t[0], RN);
            }
            mpfr_set_zero(t[2], 1);
            for (int j = 0; j < k; ++j) {
                mpfr_mul(t[0], lad.b(i, j), v[j], RN);
                mpfr_add(t[2], t[2], t[0], RN);
            }
            mpfr_mul(t[2], t[2], theta, RN);
            mpfr_sub(r[i], r[i], t[2], RN);
        }
        mpfr_set_zero(t[1], 1);
        for (int i = 0; i < k; ++i) {
            mpfr_sqr(t[0], r[i], RN);
            mpfr_add(t[1], t[1], t[0], RN);
        }
        mpfr_sqrt(t[1], t[1], RN);
        // Tolerance check at working precision.
        mpfr_set_si(t[2], residual_tol_log10, RN);
        mpfr_exp10(t[2], t[2], RN);
        if (mpfr_cmp(t[1], t[2]) > 0) {
            char msg[200];
            std::snprintf(msg, sizeof msg,
                          "pencil residual %.3e exceeds tolerance 1e%ld at dimension %d -- "
                          "working precision insufficient",
                          mpfr_get_d(t[1], RN), residual_tol_log10, k);
            throw precision_error(msg);
        }
        resid_out = mpfr_get_d(t[1], RN);
        coeffs.clear();
        coeffs.reserve(k);
        for (int i = 0; i < k; ++i) {
            Real c = Real::of_si(0, prec);
            mpfr_set(c.mid_rw(), v[i], RN);
            coeffs.push_back(std::move(c));
        }
    }

    // Assemble the caller-facing coefficient column from a real ladder vector.
    std::vector<Complex> assemble(const std::vector<Real>& raw) const {
        std::vector<Complex> out;
        if (!dbl) {
            out.reserve(raw.size());
            for (const auto& x : raw) out.push_back(Complex::of_real(x));
        } else {
            out.reserve(raw.size() / 2);
            for (std::size_t i = 0; i + 1 < raw.size(); i += 2)
                out.emplace_back(raw[i], raw[i + 1]);
        }
        return out;
    }

    struct ExtremeOne {
        Real lambda{64};
        std::vector<Complex> vec;
        double resid = 0.0;
    };

    // Solve both extreme indices off one shared tridiagonal reduction.
    void solve_extremes(bool want_vectors, long residual_tol_log10, ExtremeOne& out_min,
                        ExtremeOne& out_max) {
        const int k = lad.n;
        mvec W(static_cast<std::size_t>(k) * k, prec);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                mpfr_set(W[static_cast<std::size_t>(i) * k + j], lad.s(i, j), RN);
        mvec d(static_cast<std::size_t>(k), prec), e(static_cast<std::size_t>(std::max(k - 1, 1)), prec),
            tau(static_cast<std::size_t>(k), prec);
        tridiagonalize(W, k, prec, d, e, tau);
        const long slack = eigen_slack_exp(-1.0e9);
        const int idx[2] = {0, k - 1};
        ExtremeOne* outs[2] = {&out_min, &out_max};
        for (int which = 0; which < 2; ++which) {
            mvec lo(1, prec), hi(1, prec);
            bisect_eigenvalue(d, e, k, idx[which], lo[0], hi[0], prec);
            Real ball = Real::of_interval(lo[0], hi[0], 192);
            ball.add_error_2exp(slack);
            outs[which]->lambda = ball;
            if (want_vectors) {
                mvec theta(1, prec), z(static_cast<std::size_t>(k), prec);
                mpfr_add(theta[0], lo[0], hi[0], RN);
                mpfr_div_2ui(theta[0], theta[0], 1, RN);
                tridiag_inverse_iteration(d, e, k, theta[0], prec, z);
                back_transform(W, tau, k, prec, z);
                std::vector<Real> coeffs;
                finish_vector(z, theta[0], residual_tol_log10, coeffs, outs[which]->resid);
                outs[which]->vec = assemble(coeffs);
            }
            if (k == 1) {  // single eigenvalue: both extremes coincide
                out_max = out_min;
                break;
            }
        }
    }

    Full run_jacobi(bool want_vectors, long off_tol_log10, long residual_tol_log10) {
        const int k = lad.n;
        mvec W(static_cast<std::size_t>(k) * k, prec);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                mpfr_set(W[static_cast<std::size_t>(i) * k + j], lad.s(i, j), RN);
        auto w = [&](int i, int j) -> mpfr_ptr { return W[static_cast<std::size_t>(i) * k + j]; };
        auto V = std::make_unique<mvec>(static_cast<std::size_t>(k) * k, prec);
        auto vat = [&](int i, int j) -> mpfr_ptr { return (*V)[static_cast<std::size_t>(i) * k + j]; };
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) mpfr_set_si(vat(i, j), i == j ? 1 : 0, RN);

        mvec t(6, prec), thresh(1, prec), skip(1, prec);
        lad.fnorm_s(t[0]);
        mpfr_set_ui(t[1], 1, RN);
        if (mpfr_cmp(t[0], t[1]) > 0) mpfr_set(t[1], t[0], RN);
        mpfr_set_si(thresh[0], off_tol_log10, RN);
        mpfr_exp10(thresh[0], thresh[0], RN);
        mpfr_mul(thresh[0], thresh[0], t[1], RN);
        mpfr_div_ui(skip[0], thresh[0], 4 * static_cast<unsigned>(k) + 4, RN);

        for (int sweep = 0;; ++sweep) {
            // Off-diagonal Frobenius norm.
            mpfr_set_zero(t[0], 1);
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j) {
                    mpfr_sqr(t[1], w(i, j), RN);
                    mpfr_add(t[0], t[0], t[1], RN);
                }
            mpfr_mul_2ui(t[0], t[0], 1, RN);
            mpfr_sqrt(t[0], t[0], RN);
            if (mpfr_cmp(t[0], thresh[0]) <= 0) break;
            if (sweep >= 60)
                throw precision_error(
                    "eigensolver iteration ceiling: cyclic sweeps failed to reach the "
                    "off-diagonal target");
            for (int p = 0; p < k - 1; ++p)
                for (int q = p + 1; q < k; ++q) {
                    mpfr_abs(t[0], w(p, q), RN);
                    if (mpfr_cmp(t[0], skip[0]) <= 0) continue;
                    // Rotation angle.
                    mpfr_sub(t[1], w(q, q), w(p, p), RN);
                    mpfr_mul_2ui(t[2], w(p, q), 1, RN);
                    mpfr_div(t[1], t[1], t[2], RN);  // tau
                    // tt = sign(tau) / (|tau| + sqrt(1 + tau^2))
                    mpfr_sqr(t[2], t[1], RN);
                    mpfr_add_ui(t[2], t[2], 1, RN);
                    mpfr_sqrt(t[2], t[2], RN);
                    mpfr_abs(t[3], t[1], RN);
                    mpfr_add(t[2], t[2], t[3], RN);
                    mpfr_ui_div(t[2], 1, t[2], RN);
                    if (mpfr_sgn(t[1]) < 0) mpfr_neg(t[2], t[2], RN);  // tt
                    // c = 1/sqrt(1+tt^2), s = tt*c.
                    mpfr_sqr(t[3], t[2], RN);
                    mpfr_add_ui(t[3], t[3], 1, RN);
                    mpfr_sqrt(t[3], t[3], RN);
                    mpfr_ui_div(t[3], 1, t[3], RN);  // c
                    mpfr_mul(t[4], t[2], t[3], RN);  // s
                    // Diagonal and pivot updates.
                    mpfr_mul(t[5], t[2], w(p, q), RN);  // tt*apq
                    mpfr_sub(w(p, p), w(p, p), t[5], RN);
                    mpfr_add(w(q, q), w(q, q), t[5], RN);
                    mpfr_set_zero(w(p, q), 1);
                    mpfr_set_zero(w(q, p), 1);
                    for (int i = 0; i < k; ++i) {
                        if (i == p || i == q) continue;
                        mpfr_set(t[0], w(i, p), RN);
                        mpfr_set(t[1], w(i, q), RN);
                        mpfr_mul(t[2], t[3], t[0], RN);
                        mpfr_mul(t[5], t[4], t[1], RN);
                        mpfr_sub(t[2], t[2], t[5], RN);
                        mpfr_set(w(i, p), t[2], RN);
                        mpfr_set(w(p, i), t[2], RN);
                        mpfr_mul(t[2], t[4], t[0], RN);
                        mpfr_mul(t[5], t[3], t[1], RN);
                        mpfr_add(t[2], t[2], t[5], RN);
                        mpfr_set(w(i, q), t[2], RN);
                        mpfr_set(w(q, i), t[2], RN);
                    }
                    for (int i = 0; i < k; ++i) {
                        mpfr_set(t[0], vat(i, p), RN);
                        mpfr_set(t[1], vat(i, q), RN);
                        mpfr_mul(t[2], t[3], t[0], RN);
                        mpfr_mul(t[5], t[4], t[1], RN);
                        mpfr_sub(t[2], t[2], t[5], RN);
                        mpfr_set(vat(i, p), t[2], RN);
                        mpfr_mul(t[2], t[4], t[0], RN);
                        mpfr_mul(t[5], t[3], t[1], RN);
                        mpfr_add(t[2], t[2], t[5], RN);
                        mpfr_set(vat(i, q), t[2], RN);
                    }
                }
        }

        // Sort by diagonal value.
        std::vector<int> order(static_cast<std::size_t>(k));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) { return mpfr_cmp(w(x, x), w(y, y)) < 0; });

        long slack = eigen_slack_exp(log2_abs(thresh[0]));
        Full out;
        out.eigenvalues.reserve(order.size());
        mvec y(static_cast<std::size_t>(k), prec);
        for (int kk = 0; kk < k; ++kk) {
            int c = order[static_cast<std::size_t>(kk)];
            Real ball = Real::of_interval(w(c, c), w(c, c), 192);
            ball.add_error_2exp(slack);
            out.eigenvalues.push_back(std::move(ball));
            if (want_vectors) {
                for (int i = 0; i < k; ++i) mpfr_set(y[i], vat(i, c), RN);
                std::vector<Real> coeffs;
                double resid = 0.0;
                finish_vector(y, w(c, c), residual_tol_log10, coeffs, resid);
                out.vectors.push_back(assembleReal(coeffs));
                out.residuals.push_back(resid);
            }
        }
        return out;
    }

    std::vector<Complex> assembleReal(const std::vector<Real>& raw) const { return assemble(raw); }
};

PencilLadder::PencilLadder(const MatrixPair& pair, long internal_digits)
    : impl_(std::make_unique<Impl>(pair, internal_digits)) {}
PencilLadder::~PencilLadder() = default;
PencilLadder::PencilLadder(PencilLadder&&) noexcept = default;
PencilLadder& PencilLadder::operator=(PencilLadder&&) noexcept = default;

int PencilLadder::dim() const { return impl_->logical_n; }

void PencilLadder::extend_to(int n) { impl_->extend_to(n); }

PencilLadder::Extremes PencilLadder::extremes(bool want_vectors, long residual_tol_log10) {
    if (impl_->logical_n < 1) throw domain_error("ladder is empty");
    Extremes out;
    Impl::ExtremeOne lo, hi;
    impl_->solve_extremes(want_vectors, residual_tol_log10, lo, hi);
    out.lambda_min = lo.lambda;
    out.lambda_max = hi.lambda;
    out.residual_min = lo.resid;
    out.residual_max = hi.resid;
    if (want_vectors) {
        out.vec_min = lo.vec;
        out.vec_max = hi.vec;
    }
    return out;
}

PencilLadder::Full PencilLadder::full(bool want_vectors, long off_tol_log10,
                                      long residual_tol_log10) {
    if (impl_->logical_n < 1) throw domain_error("ladder is empty");
    Full raw = impl_->run_jacobi(want_vectors, off_tol_log10, residual_tol_log10);
    if (!impl_->dbl) return raw;
    // Doubled spectra: eigenvalues arrive in coincident pairs; merge each pair
    // into the hull and keep one (complex-assembled) vector per pair.
    Full out;
    mvec alo(1, 192), ahi(1, 192), blo(1, 192), bhi(1, 192);
    for (std::size_t i = 0; i + 1 < raw.eigenvalues.size(); i += 2) {
        const Real& a = raw.eigenvalues[i];
        const Real& b = raw.eigenvalues[i + 1];
        a.lower(alo[0]);
        a.upper(ahi[0]);
        b.lower(blo[0]);
        b.upper(bhi[0]);
        if (mpfr_cmp(blo[0], alo[0]) < 0) mpfr_set(alo[0], blo[0], RN);
        if (mpfr_cmp(bhi[0], ahi[0]) > 0) mpfr_set(ahi[0], bhi[0], RN);
        out.eigenvalues.push_back(Real::of_interval(alo[0], ahi[0], 192));
        if (want_vectors) {
            bool first = raw.residuals[i] <= raw.residuals[i + 1];
            out.vectors.push_back(raw.vectors[first ? i : i + 1]);
            out.residuals.push_back(raw.residuals[first ? i : i + 1]);
        }
    }
    return out;
}

Real PencilLadder::min_b_eigen(long b_rad_log2) {
    if (impl_->logical_n < 1) throw domain_error("ladder is empty");
    impl_->ensure_minb();
    Real ball = impl_->minb_ball;
    if (b_rad_log2 != LONG_MIN) {
        double log2n = std::log2(static_cast<double>(impl_->lad.n) + 1.0);
        ball.add_error_2exp(b_rad_log2 + static_cast<long>(std::ceil(log2n)) + 1);
    }
    return ball;
}

// --- Drivers -----------------------------------------------------------------

SpectrumResult gevp_solve(const MatrixPair& pair, const PrecisionPolicy& policy, SolveMode mode,
                          bool want_vectors) {
    policy.validate();
    long internal = internal_solve_digits(policy.solver_digits, pair.dim);
    PencilLadder lad(pair, internal);
    lad.extend_to(pair.dim);
    long rtol = -(policy.solver_digits - 10);
    SpectrumResult res;
    res.dim = pair.dim;
    res.min_gram_eig = lad.min_b_eigen(pair.b_rad_log2);
    if (mode == SolveMode::extremes) {
        res.extremes_only = true;
        auto ex = lad.extremes(want_vectors, rtol);
        res.eigenvalues.push_back(ex.lambda_min);
        res.eigenvalues.push_back(ex.lambda_max);
        res.residuals.push_back(ex.residual_min);
        res.residuals.push_back(ex.residual_max);
        if (want_vectors) {
            res.vectors.push_back(std::move(ex.vec_min));
            res.vectors.push_back(std::move(ex.vec_max));
        }
    } else {
        auto full = lad.full(want_vectors, -(policy.solver_digits + 5), rtol);
        res.eigenvalues = std::move(full.eigenvalues);
        res.vectors = std::move(full.vectors);
        res.residuals = std::move(full.residuals);
    }
    return res;
}

ErrorCertificate certify_bounds(int n, double lambda_bound, const Real& da_inf,
                                const Real& db_inf, const Real& min_sigma_lower_ball) {
    const mpfr_prec_t wp = 192;
    ErrorCertificate cert;
    cert.n = n;
    cert.lambda_bound = lambda_bound;
    cert.da_inf = da_inf;
    cert.db_inf = db_inf;

    // Unfavorable endpoint of the Gram minimum.
    mvec lo(1, wp);
    min_sigma_lower_ball.lower(lo[0]);
    Real sigma = Real::of_interval(lo[0], lo[0], wp);
    cert.min_sigma_lower = sigma;
    if (!sigma.certainly_positive()) {
        cert.issued = false;
        cert.required_digits = 0;
        cert.message =
            "uncertifiable: increase element precision (Gram minimum eigenvalue not resolved "
            "above zero)";
        return cert;
    }

    Real lb = Real::of_d(lambda_bound, wp);
    Real one_lam = add_si(sqr(lb), 1);  // 1 + lambda_bound^2
    Real num = mul_si(one_lam * (sqr(da_inf) + sqr(db_inf)), n);
    Real cmax = num / sqr(sigma);
    cert.c_max = cmax;

    Real half = Real::of_ratio(1, 2, wp);
    if ((half - cmax).certainly_positive()) {
        cert.issued = true;
        cert.message = "certificate issued";
        return cert;
    }
    cert.issued = false;
    // Required digits d: 10^-2d < sigma^2 / (4 n (1 + lambda^2)),
    // i.e. d > log10( 2 sqrt(n (1+lambda^2)) / sigma ).
    long e2 = 0;
    double m = mpfr_get_d_2exp(&e2, lo[0], RN);
    double log10_sigma = std::log10(std::fabs(m)) + static_cast<double>(e2) * 0.30102999566398120;
    double need = std::log10(2.0 * std::sqrt(n * (1.0 + lambda_bound * lambda_bound))) - log10_sigma;
    cert.required_digits = static_cast<long>(std::ceil(need)) + 1;
    char msg[160];
    std::snprintf(msg, sizeof msg, "uncertifiable: increase element precision (need >= %ld digits)",
                  cert.required_digits);
    cert.message = msg;
    return cert;
}

ErrorCertificate certify(const SpectrumResult& result, const Real& element_radius, int n,
                         double lambda_bound) {
    return certify_bounds(n, lambda_bound, element_radius, element_radius, result.min_gram_eig);
}

Real ErrorCertificate::radius_for(const Real& lambda) const {
    if (!issued) throw domain_error("certificate was refused; no radius available");
    const mpfr_prec_t wp = 192;
    Real two_lam2 = mul_si(sqr(lambda), 2);
    Real num = c_max * add_si(two_lam2, 1);
    Real den = add_si(-mul_si(c_max, 2), 1);  // 1 - 2 C_max > 0 when issued
    Real rad2 = num / den;
    Real r = sqrt(max(rad2, Real::of_si(0, wp)));
    // Collapse to the upper endpoint (a certified point bound).
    mvec up(1, wp);
    r.upper(up[0]);
    return Real::of_interval(up[0], up[0], wp);
}

}  // namespace backflow
