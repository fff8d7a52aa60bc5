#include "backflow/accel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "backflow/errors.hpp"
#include "backflow/prec.hpp"

namespace backflow {

const Real& RealSequence::at(long n) const {
    long i = n - start_index;
    if (i < 0 || i >= static_cast<long>(values.size()))
        throw domain_error("sequence index out of range");
    return values[static_cast<std::size_t>(i)];
}

namespace {

mpfr_prec_t max_prec(const RealSequence& x) {
    mpfr_prec_t p = 64;
    for (const auto& v : x.values) p = std::max(p, v.prec());
    return p;
}

void require_positive_start(const RealSequence& x) {
    if (x.start_index < 1)
        throw domain_error("index-weighted accelerators require start_index >= 1");
}

}  // namespace

PowerLadder PowerLadder::of(std::vector<double> gammas) {
    PowerLadder l;
    l.gammas = std::move(gammas);
    l.r.resize(l.gammas.size());
    for (std::size_t i = 0; i < l.r.size(); ++i) l.r[i] = static_cast<long>(i) + 1;
    l.validate();
    return l;
}

void PowerLadder::validate() const {
    if (gammas.empty() || gammas.size() != r.size())
        throw domain_error("power ladder needs matching, nonempty exponent and stride lists");
    if (gammas[0] != 0.0) throw domain_error("power ladder must start at exponent 0");
    for (std::size_t i = 1; i < gammas.size(); ++i)
        if (!(gammas[i] > gammas[i - 1]))
            throw domain_error("power ladder exponents must be strictly increasing");
    if (r[0] != 1) throw domain_error("power ladder strides must start at 1");
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] <= r[i - 1]) throw domain_error("power ladder strides must be strictly increasing");
}

std::vector<Real> ladder_weights(const PowerLadder& ladder, mpfr_prec_t prec_bits) {
    ladder.validate();
    const int k = static_cast<int>(ladder.gammas.size());
    // M[i][j] = r_j^-gamma_i, rhs = e_1.
    std::vector<Real> m(static_cast<std::size_t>(k) * k, Real(prec_bits));
    std::vector<Real> rhs(static_cast<std::size_t>(k), Real(prec_bits));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            Real base = Real::of_si(ladder.r[static_cast<std::size_t>(j)], prec_bits);
            Real e = Real::of_d(-ladder.gammas[static_cast<std::size_t>(i)], prec_bits);
            m[static_cast<std::size_t>(i) * k + j] = pow(base, e);
        }
        rhs[static_cast<std::size_t>(i)] = Real::of_si(i == 0 ? 1 : 0, prec_bits);
    }
    // Gaussian elimination with partial pivoting (ball arithmetic).
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    auto at = [&](int i, int j) -> Real& {
        return m[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]) * k + j];
    };
    auto rb = [&](int i) -> Real& { return rhs[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]; };
    for (int c = 0; c < k; ++c) {
        int best = c;
        double bestmag = std::fabs(at(c, c).mid_d());
        for (int i = c + 1; i < k; ++i) {
            double mag = std::fabs(at(i, c).mid_d());
            if (mag > bestmag) {
                bestmag = mag;
                best = i;
            }
        }
        std::swap(perm[static_cast<std::size_t>(c)], perm[static_cast<std::size_t>(best)]);
        if (at(c, c).contains_zero())
            throw domain_error("power ladder weight system is singular (duplicate exponents?)");
        for (int i = c + 1; i < k; ++i) {
            Real f = at(i, c) / at(c, c);
            for (int j = c; j < k; ++j) at(i, j) -= f * at(c, j);
            rb(i) -= f * rb(c);
        }
    }
    std::vector<Real> v(static_cast<std::size_t>(k), Real(prec_bits));
    for (int i = k - 1; i >= 0; --i) {
        Real s = rb(i);
        for (int j = i + 1; j < k; ++j) s -= at(i, j) * v[static_cast<std::size_t>(j)];
        v[static_cast<std::size_t>(i)] = s / at(i, i);
    }
    return v;
}

RealSequence richardson(const RealSequence& x, double gamma) {
    if (!(gamma > 0.0)) throw domain_error("richardson order must be positive");
    if (x.values.size() < 2) throw domain_error("richardson needs at least two values");
    require_positive_start(x);
    const long lo = x.start_index;
    const long hi = x.last_index() / 2;
    if (hi < lo) throw domain_error("sequence too short for the requested subsampling");
    mpfr_prec_t wp = max_prec(x) + 16;
    Real two_g = pow(Real::of_si(2, wp), Real::of_d(gamma, wp));
    Real denom = add_si(two_g, -1);
    RealSequence out;
    out.start_index = lo;
    out.values.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long n = lo; n <= hi; ++n)
        out.values.push_back((two_g * x.at(2 * n) - x.at(n)) / denom);
    return out;
}

RealSequence generalized_richardson(const RealSequence& x, const PowerLadder& ladder) {
    ladder.validate();
    require_positive_start(x);
    const long rk = ladder.r.back();
    if (static_cast<long>(x.values.size()) < rk)
        throw domain_error("sequence shorter than the widest ladder stride");
    const long lo = x.start_index;
    const long hi = x.last_index() / rk;
    if (hi < lo) throw domain_error("sequence too short for the requested subsampling");
    mpfr_prec_t wp = max_prec(x);
    std::vector<Real> v = ladder_weights(ladder, wp + bits_for_digits(20) - 17);
    RealSequence out;
    out.start_index = lo;
    out.values.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long n = lo; n <= hi; ++n) {
        Real s(wp);
        bool first = true;
        for (std::size_t j = 0; j < v.size(); ++j) {
            Real term = v[j] * x.at(n * ladder.r[j]);
            s = first ? term : s + term;
            first = false;
        }
        out.values.push_back(std::move(s));
    }
    return out;
}

RealSequence kz_filter(const RealSequence& x, int m, int k) {
    if (m < 1 || m % 2 == 0) throw domain_error("moving-average window must be odd and positive");
    if (k < 1) throw domain_error("filter pass count must be positive");
    if (static_cast<long>(x.values.size()) <= static_cast<long>(k) * (m - 1))
        throw domain_error("sequence too short for the requested filter");
    const int h = (m - 1) / 2;
    RealSequence cur = x;
    for (int pass = 0; pass < k; ++pass) {
        RealSequence next;
        next.start_index = cur.start_index + h;
        const long n = static_cast<long>(cur.values.size());
        next.values.reserve(static_cast<std::size_t>(n - 2 * h));
        for (long i = h; i < n - h; ++i) {
            Real s = cur.values[static_cast<std::size_t>(i - h)];
            for (long j = i - h + 1; j <= i + h; ++j) s += cur.values[static_cast<std::size_t>(j)];
            next.values.push_back(div_si(s, m));
        }
        cur = std::move(next);
    }
    return cur;
}

RDResult raabe_duhamel(const RealSequence& x) {
    if (x.values.size() < 3) throw domain_error("nonlinear acceleration needs at least three values");
    require_positive_start(x);
    RDResult out;
    out.accelerated.start_index = x.start_index;
    const long lo = x.start_index, hi = x.last_index() - 2;
    out.accelerated.values.reserve(static_cast<std::size_t>(hi - lo + 1));
    out.condition.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long n = lo; n <= hi; ++n) {
        Real d1 = x.at(n + 1) - x.at(n);
        Real d2 = x.at(n + 2) - x.at(n + 1);
        Real den = mul_si(d2, n + 1) - mul_si(d1, n);
        double d1m = d1.mid_d();
        if (d1m != 0.0)
            out.condition.push_back((static_cast<double>(n + 1)) * d2.mid_d() / d1m -
                                    static_cast<double>(n));
        else
            out.condition.push_back(std::numeric_limits<double>::quiet_NaN());
        if (den.contains_zero()) {
            out.flagged.push_back(n);
            out.accelerated.values.push_back(x.at(n));
        } else {
            out.accelerated.values.push_back(x.at(n) - mul_si(sqr(d1), n) / den);
        }
    }
    return out;
}

ExponentFit exponent_fit(const RealSequence& x, const std::vector<double>& gamma_grid) {
    if (x.values.size() < 8) throw domain_error("exponent fit needs at least eight values");
    require_positive_start(x);
    const long lo = x.start_index, hi = x.last_index() - 1;  // diff indices
    std::vector<long> idx;
    std::vector<double> diff;
    for (long n = lo; n <= hi; ++n) {
        Real d = x.at(n + 1) - x.at(n);
        idx.push_back(n);
        diff.push_back(d.mid_d());
    }
    // Tail: second half of the difference indices.
    std::size_t tail0 = diff.size() / 2;
    int sign = 0;
    for (std::size_t i = tail0; i < diff.size(); ++i) {
        int s = diff[i] > 0 ? 1 : (diff[i] < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign))
            throw domain_error("fit-rejected: sequence is not strictly monotone on its tail");
        sign = s;
    }
    if (diff.size() - tail0 < 3) throw domain_error("fit-rejected: tail too short");

    // Least squares of log|diff| against log N over the tail.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(diff.size() - tail0);
    for (std::size_t i = tail0; i < diff.size(); ++i) {
        double t = std::log(static_cast<double>(idx[i]));
        double y = std::log(std::fabs(diff[i]));
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    double inter = (sy - slope * sx) / cnt;
    ExponentFit fit;
    fit.gamma = -slope - 1.0;
    fit.intercept = inter;
    fit.beta = sign * std::exp(inter) / fit.gamma;

    // Pearson correlation between N and N^(gamma+2) diff_N per grid entry.
    double best_rho = -2.0;
    for (double g : gamma_grid) {
        double mx = 0, my = 0;
        for (std::size_t i = tail0; i < diff.size(); ++i) {
            mx += static_cast<double>(idx[i]);
            my += std::pow(static_cast<double>(idx[i]), g + 2.0) * diff[i];
        }
        mx /= cnt;
        my /= cnt;
        double cxy = 0, cxx = 0, cyy = 0;
        for (std::size_t i = tail0; i < diff.size(); ++i) {
            double dx = static_cast<double>(idx[i]) - mx;
            double dy = std::pow(static_cast<double>(idx[i]), g + 2.0) * diff[i] - my;
            cxy += dx * dy;
            cxx += dx * dx;
            cyy += dy * dy;
        }
        double rho = (cxx > 0 && cyy > 0) ? cxy / std::sqrt(cxx * cyy) : 0.0;
        fit.pearson.emplace_back(g, rho);
        // Decreasing sequences have negative differences; the linear-trend
        // peak is then at the most negative correlation.  Compare |rho|.
        double score = sign > 0 ? rho : -rho;
        if (score > best_rho) {
            best_rho = score;
            fit.pearson_gamma = g;
        }
    }
    return fit;
}

}  // namespace backflow
