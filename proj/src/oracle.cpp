#include "backflow/oracle.hpp"

#include <cmath>
#include <vector>

#include "backflow/quad.hpp"

namespace backflow {

namespace {

// Sum over intervals of (e^{i t_{2k} u} - e^{i t_{2k-1} u}) / u, split into
// real and imaginary parts; series below |u| = 1e-6 where the direct form
// loses all its digits.  Returns (S, C) with
//   S = sum_k [sin(t_{2k} u) - sin(t_{2k-1} u)] / u,
//   C = sum_k [cos(t_{2k} u) - cos(t_{2k-1} u)] / u.
void phase_diff_sum(const std::vector<double>& t, double u, double& S, double& C) {
    S = 0.0;
    C = 0.0;
    if (std::fabs(u) >= 1e-6) {
        double inv = 1.0 / u;
        for (size_t k = 0; k + 1 < t.size(); k += 2) {
            S += (std::sin(t[k + 1] * u) - std::sin(t[k] * u)) * inv;
            C += (std::cos(t[k + 1] * u) - std::cos(t[k] * u)) * inv;
        }
        return;
    }
    double u2 = u * u;
    for (size_t k = 0; k + 1 < t.size(); k += 2) {
        double a = t[k], b = t[k + 1];
        double a2 = a * a, b2 = b * b;
        double a3 = a2 * a, b3 = b2 * b;
        // [sin(bu)-sin(au)]/u = (b-a) - (b^3-a^3)u^2/6 + (b^5-a^5)u^4/120 - ...
        S += (b - a) - (b3 - a3) * u2 / 6.0 + (b3 * b2 - a3 * a2) * u2 * u2 / 120.0;
        // [cos(bu)-cos(au)]/u = -(b^2-a^2)u/2 + (b^4-a^4)u^3/24 - ...
        C += -(b2 - a2) * u / 2.0 + (b2 * b2 - a2 * a2) * u2 * u / 24.0;
    }
}

}  // namespace

std::complex<double> quadrature_oracle(long m, long n, const TimeGrid& grid,
                                       const BasisSpec& spec, double tol, double* err_out) {
    spec.validate();
    if (m < 0 || n < 0) throw domain_error("oracle indices must be >= 0");
    const std::vector<double>& ts = grid.times();
    double a = spec.a, delta = spec.delta;
    double lgE = [&](long idx) {
        double nu = static_cast<double>(idx) + delta;
        return (nu + 0.5) * std::log(2.0 * a) - 0.5 * std::lgamma(2.0 * nu + 1.0);
    }(m) + [&](long idx) {
        double nu = static_cast<double>(idx) + delta;
        return (nu + 0.5) * std::log(2.0 * a) - 0.5 * std::lgamma(2.0 * nu + 1.0);
    }(n);

    // Substitute p = x^4, q = y^4: the (p/q)^{1/4} momentum-ratio factor and
    // the q^{delta} edge behavior both become plain powers of x, y, leaving a
    // smooth integrand on [0, (40/a)^{1/4}]^2.
    double em = 4.0 * (static_cast<double>(m) + delta);
    double en = 4.0 * (static_cast<double>(n) + delta);
    auto f = [&](double x, double y) -> std::complex<double> {
        if (x <= 0.0 || y <= 0.0) return {0.0, 0.0};
        double p = x * x * x * x, q = y * y * y * y;
        double S, C;
        phase_diff_sum(ts, p - q, S, C);
        // kernel = -(1/(4 pi i)) (sum of phase differences)/(p-q)
        //        = (-S + iC) / (4 pi), before the momentum-ratio factor.
        double lx = std::log(x), ly = std::log(y);
        double base = lgE - a * (p + q);
        double t1 = std::exp(base + (em + 4.0) * lx + (en + 2.0) * ly);  // (p/q)^{1/4} branch
        double t2 = std::exp(base + (em + 2.0) * lx + (en + 4.0) * ly);  // (q/p)^{1/4} branch
        double w = 16.0 * (t1 + t2) / (4.0 * M_PI);
        return {-S * w, C * w};
    };
    double U = std::pow(40.0 / a, 0.25);
    QuadOptions opt;
    opt.abs_tol = tol;
    opt.max_panels = 60000;
    QuadOutcomeC res = integrate_2d_c(f, 0.0, U, 0.0, U, opt);
    if (err_out) *err_out = res.error + 1e-9;  // + tail allowance (e^{-40} suppression)
    return res.value;
}

double gram_quadrature(long m, long n, const BasisSpec& spec, double tol, double* err_out) {
    spec.validate();
    if (m < 0 || n < 0) throw domain_error("oracle indices must be >= 0");
    double a = spec.a, delta = spec.delta;
    auto lgE = [&](long idx) {
        double nu = static_cast<double>(idx) + delta;
        return (nu + 0.5) * std::log(2.0 * a) - 0.5 * std::lgamma(2.0 * nu + 1.0);
    };
    double base = lgE(m) + lgE(n);
    // Substitute q = v^2 to flatten the q^{2 delta} edge power.
    double expo = 2.0 * (static_cast<double>(m + n) + 2.0 * delta) + 1.0;
    auto f = [&](double v) -> double {
        if (v <= 0.0) return 0.0;
        double q = v * v;
        return 2.0 * std::exp(base + expo * std::log(v) - 2.0 * a * q);
    };
    double U = std::sqrt(40.0 / a);
    QuadOptions opt;
    opt.abs_tol = tol;
    opt.max_panels = 200000;
    QuadOutcome res = integrate_1d(f, 0.0, U, opt);
    if (err_out) *err_out = res.error + 1e-13;
    return res.value;
}

}  // namespace backflow
