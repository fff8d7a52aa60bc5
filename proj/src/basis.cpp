#include "backflow/basis.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "backflow/gamma.hpp"
#include "backflow/prec.hpp"

namespace backflow {

BasisSpec BasisSpec::for_fold(int M) {
    if (M < 1) throw domain_error("interval count M must be >= 1");
    BasisSpec s;
    s.a = 2.0 * M / M_PI;
    s.delta = -0.25;
    return s;
}

std::string BasisSpec::to_kv() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "a=%a,delta=%a", a, delta);
    return buf;
}

BasisSpec BasisSpec::from_kv(const std::string& kv) {
    BasisSpec s;
    auto grab = [&kv](const char* key) {
        size_t pos = kv.find(key);
        if (pos == std::string::npos)
            throw domain_error(std::string("basis serialization missing key ") + key);
        const char* c = kv.c_str() + pos + std::string(key).size();
        char* endp = nullptr;
        double v = std::strtod(c, &endp);
        if (endp == c) throw domain_error("basis serialization has a malformed value");
        return v;
    };
    s.a = grab("a=");
    s.delta = grab("delta=");
    s.validate();
    return s;
}

double basis_eval(long n, const BasisSpec& spec, double q) {
    spec.validate();
    if (n < 0) throw domain_error("basis index must be >= 0");
    if (!(q > 0.0)) throw domain_error("basis argument q must be positive");
    double nu = static_cast<double>(n) + spec.delta;
    double lg = (nu + 0.5) * std::log(2.0 * spec.a) -
                0.5 * std::lgamma(2.0 * nu + 1.0) + nu * std::log(q) - spec.a * q;
    return std::exp(lg);
}

Real basis_eval_r(long n, const BasisSpec& spec, const Real& q, long digits) {
    spec.validate();
    if (n < 0) throw domain_error("basis index must be >= 0");
    if (!q.certainly_positive()) throw domain_error("basis argument q must be positive");
    long d = digits + 10;
    mpfr_prec_t wp = bits_for_digits(d);
    // Exact dyadic pieces: nu = n + delta, e = nu + 1/2.
    Real nu = Real::of_si(n, wp) + Real::of_d(spec.delta, wp);
    Real e = nu + Real::of_d(0.5, wp);
    Real two_a = Real::of_d(2.0 * spec.a, wp);
    Real g = gamma_v(mul_si(nu, 2) + Real::of_si(1, wp), d);
    Real en = pow(two_a, e) / sqrt(g);
    Real qq = q + Real(wp);  // promote to working precision
    Real aq = Real::of_d(spec.a, wp) * qq;
    return en * pow(qq, nu) * exp(-aq);
}

Real gram_element(long m, long n, double delta, long digits) {
    if (m < 0 || n < 0) throw domain_error("gram indices must be >= 0");
    if (!(delta > -0.5 && delta < 0.5))
        throw domain_error("basis offset delta must lie in (-1/2, 1/2)");
    if (digits < 1) throw domain_error("requested digits must be >= 1");
    if (m == n) return Real::of_si(1, bits_for_digits(digits));
    for (int attempt = 0; attempt < 4; ++attempt) {
        long d = (digits + 10) << attempt;
        mpfr_prec_t wp = bits_for_digits(d);
        Real half = Real::of_d(0.5, wp);
        Real x = Real::of_si(m, wp) + Real::of_d(delta, wp) + half;
        Real y = Real::of_si(n, wp) + Real::of_d(delta, wp) + half;
        Real r = sqrt(beta_diag_v(x, d) * beta_diag_v(y, d)) / beta_v(x, y, d);
        if (rel_width_ok(r, digits)) return r;
    }
    throw precision_error("gram element: requested relative width unachievable");
}

}  // namespace backflow
