#include "backflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "backflow/basis.hpp"
#include "backflow/errors.hpp"
#include "backflow/quad.hpp"

namespace backflow {

namespace {

constexpr double kPi = std::numbers::pi;

mpfr_prec_t coeff_prec(const std::vector<Complex>& v) {
    mpfr_prec_t p = 64;
    for (const auto& c : v) p = std::max(p, c.prec());
    return p;
}

// Multiply every coefficient by the unit phasor conj(o)/|o| (or flip the sign
// in the real case), aligning the vector with the reference overlap o.
void rotate_by(std::vector<Complex>& v, const Complex& o, bool complex_mode) {
    if (!complex_mode) {
        if (o.re.mid_d() < 0)
            for (auto& c : v) c = -c;
        return;
    }
    Real mag = sqrt(abs_sq(o));
    if (mag.contains_zero()) return;
    Complex phase = conj(o);
    for (auto& c : v) {
        Complex t = c * phase;
        c = Complex(t.re / mag, t.im / mag);
    }
}

// Align sign/phase: against the previous vector when present (maximize the
// Gram overlap), otherwise make the largest-magnitude coefficient positive.
void fix_phase(std::vector<Complex>& v, const std::vector<Complex>& prev, const MatrixPair& pair,
               bool complex_mode) {
    if (v.empty()) return;
    if (prev.empty()) {
        std::size_t best = 0;
        double bm = -1.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            double m = std::hypot(v[i].re.mid_d(), v[i].im.mid_d());
            if (m > bm) {
                bm = m;
                best = i;
            }
        }
        rotate_by(v, v[best], complex_mode);
        return;
    }
    // o = prev^dag B v over the shared leading block.
    const mpfr_prec_t wp = coeff_prec(v);
    const std::size_t nm = prev.size(), nn = v.size();
    Complex o(wp);
    for (std::size_t m = 0; m < nm; ++m) {
        Complex row(wp);
        bool first = true;
        for (std::size_t n = 0; n < nn; ++n) {
            Complex t = mul(v[n], pair.B(static_cast<int>(m), static_cast<int>(n)));
            row = first ? t : row + t;
            first = false;
        }
        Complex t = conj(prev[m]) * row;
        o = (m == 0) ? t : o + t;
    }
    if (sqrt(abs_sq(o)).contains_zero()) {
        std::vector<Complex> none;
        fix_phase(v, none, pair, complex_mode);
        return;
    }
    rotate_by(v, o, complex_mode);
}

}  // namespace

RealSequence SpectrumSweep::back_sequence() const {
    RealSequence s;
    s.start_index = records.empty() ? 1 : records.front().N;
    for (const auto& r : records) s.values.push_back(r.lambda_back);
    return s;
}

RealSequence SpectrumSweep::over_sequence() const {
    RealSequence s;
    s.start_index = records.empty() ? 1 : records.front().N;
    for (const auto& r : records) s.values.push_back(r.lambda_over);
    return s;
}

SpectrumSweep spectrum_sweep(int M, int Nmax, const BasisSpec& spec, const PrecisionPolicy& policy,
                             const TimeGrid& grid, const std::string& cache_dir,
                             const SweepProgress& element_progress,
                             const SweepProgress& solve_progress) {
    if (M < 1) throw domain_error("fold count must be >= 1");
    if (Nmax < 1) throw domain_error("sweep needs Nmax >= 1");
    if (grid.fold() != M) throw domain_error("time grid fold does not match M");
    spec.validate();
    policy.validate();

    SpectrumSweep sw;
    sw.M = M;
    sw.grid = grid;
    sw.spec = spec;
    sw.policy = policy;

    MatrixPair pair = build_pair(Nmax, grid, spec, policy.element_digits, cache_dir,
                                 element_progress ? std::function<void(int, int)>(element_progress)
                                                  : std::function<void(int, int)>());
    sw.element_radius = pair.element_radius();

    const long internal = internal_solve_digits(policy.solver_digits, Nmax);
    PencilLadder lad(pair, internal);
    const long rtol = -(policy.solver_digits - 10);

    std::vector<Complex> prev_back, prev_over;
    sw.records.reserve(static_cast<std::size_t>(Nmax));
    for (int N = 1; N <= Nmax; ++N) {
        lad.extend_to(N);
        auto ex = lad.extremes(true, rtol);
        Real minb = lad.min_b_eigen(pair.b_rad_log2);

        SweepRecord rec;
        rec.N = N;
        rec.lambda_over = ex.lambda_min;
        rec.lambda_back = ex.lambda_max;
        rec.residual_over = ex.residual_min;
        rec.residual_back = ex.residual_max;
        rec.vec_over = std::move(ex.vec_min);
        rec.vec_back = std::move(ex.vec_max);

        double lb = std::max(std::fabs(rec.lambda_over.lower_d()),
                             std::fabs(rec.lambda_back.upper_d())) +
                    0.5;
        auto cert = certify_bounds(N, lb, sw.element_radius, sw.element_radius, minb);
        if (cert.issued) {
            rec.certified = true;
            rec.cert_back = cert.radius_for(rec.lambda_back);
            rec.cert_over = cert.radius_for(rec.lambda_over);
        } else {
            rec.certified = false;
            rec.cert_back = Real::of_si(0, 64);
            rec.cert_over = Real::of_si(0, 64);
        }

        fix_phase(rec.vec_back, prev_back, pair, pair.complex_mode);
        fix_phase(rec.vec_over, prev_over, pair, pair.complex_mode);
        prev_back = rec.vec_back;
        prev_over = rec.vec_over;

        if (N == Nmax) sw.min_gram = minb;
        sw.records.push_back(std::move(rec));
        if (solve_progress) solve_progress(N, Nmax);
    }
    return sw;
}

SpectrumSweep spectrum_sweep(int M, int Nmax, const PrecisionPolicy& policy,
                             const std::string& cache_dir, const SweepProgress& element_progress,
                             const SweepProgress& solve_progress) {
    return spectrum_sweep(M, Nmax, BasisSpec::for_fold(M), policy, equal_spacing_grid(M, 1.0),
                          cache_dir, element_progress, solve_progress);
}

// --- Eigenvector diagnostics ---------------------------------------------------

std::vector<std::complex<double>> eigvec_profile(const std::vector<Complex>& coeffs,
                                                 const BasisSpec& spec,
                                                 const std::vector<double>& p_grid,
                                                 ProfileScale scale) {
    if (coeffs.empty()) throw domain_error("eigenvector profile needs coefficients");
    spec.validate();
    const mpfr_prec_t wp = coeff_prec(coeffs);
    long digits = static_cast<long>((static_cast<double>(wp) - 17.0) / 3.3220);
    digits = std::max(digits, 30L);

    std::vector<std::complex<double>> out;
    out.reserve(p_grid.size());
    for (double p : p_grid) {
        if (!(p > 0.0)) throw domain_error("profile points must be positive");
        Real pr = Real::of_d(p, wp);
        Real sre = Real::of_si(0, wp), sim = Real::of_si(0, wp);
        for (std::size_t n = 0; n < coeffs.size(); ++n) {
            Real bn = basis_eval_r(static_cast<long>(n), spec, pr, digits);
            sre += coeffs[n].re * bn;
            sim += coeffs[n].im * bn;
        }
        double s = scale == ProfileScale::p34 ? std::pow(p, 0.75) : 1.0;
        out.emplace_back(sre.mid_d() * s, sim.mid_d() * s);
    }
    return out;
}

double eigvec_distance(const std::vector<Complex>& va, const BasisSpec& spec_a,
                       const std::vector<Complex>& vb, const BasisSpec& spec_b, long digits) {
    if (!(spec_a == spec_b))
        throw domain_error("eigenvector distance requires matching basis parameters");
    if (va.empty() || vb.empty()) throw domain_error("eigenvector distance needs coefficients");
    const std::size_t n = std::max(va.size(), vb.size());
    const mpfr_prec_t wp = std::max(coeff_prec(va), coeff_prec(vb));

    // Symmetric Gram block, computed once.
    std::vector<Real> g;
    g.reserve(n * (n + 1) / 2);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = m; k < n; ++k)
            g.push_back(gram_element(static_cast<long>(m), static_cast<long>(k), spec_a.delta,
                                     digits));
    auto gram = [&](std::size_t i, std::size_t j) -> const Real& {
        if (i > j) std::swap(i, j);
        return g[i * n - i * (i - 1) / 2 + (j - i)];
    };
    auto quad = [&](const std::vector<Complex>& u, const std::vector<Complex>& v) -> Complex {
        Complex acc(wp);
        bool first = true;
        for (std::size_t m = 0; m < u.size(); ++m) {
            Complex row(wp);
            bool rf = true;
            for (std::size_t k = 0; k < v.size(); ++k) {
                Complex t = mul(v[k], gram(m, k));
                row = rf ? t : row + t;
                rf = false;
            }
            Complex t = conj(u[m]) * row;
            acc = first ? t : acc + t;
            first = false;
        }
        return acc;
    };
    Real aa = quad(va, va).re;
    Real bb = quad(vb, vb).re;
    Real ab = sqrt(abs_sq(quad(va, vb)));
    Real d2 = aa + bb - mul_si(ab, 2);
    d2 = max(d2, Real::of_si(0, wp));
    return sqrt(d2).mid_d();
}

// --- Analytic trial-state bound --------------------------------------------------

double trial_kernel(int M, double x) {
    if (M < 2 || M % 2 != 0) throw domain_error("oscillation kernel requires even M >= 2");
    x = std::fabs(x);  // even function
    auto sinc = [](double t) {
        if (std::fabs(t) < 1e-8) return 1.0 - t * t / 6.0;
        return std::sin(t) / t;
    };
    const double half_pi = kPi / 2.0;
    double kd = std::round(x / half_pi);
    long k = static_cast<long>(kd);
    double y = x - kd * half_pi;
    if (k % 2 != 0 && std::fabs(y) < 0.3) {
        // Near an odd multiple of pi/2: cos x = -+ sin y and, for even M,
        // sin(2Mx) = sin(2My); the ratio collapses to -+ sinc(2My)/(x sinc y).
        double v = sinc(2.0 * M * y) / (x * sinc(y));
        return (k % 4 == 1) ? -v : v;
    }
    double c = std::cos(x);
    return sinc(2.0 * M * x) / c;
}

double S_function(double eta) {
    if (eta < 0) throw domain_error("S is defined for eta >= 0");
    const double q = std::pow(eta, 0.25);
    return 1.0 - (31.0 * kPi * kPi / 80.0) * q - (5.0 / 8.0) * eta -
           (9.0 * kPi * kPi / 176.0) * eta * q;
}

SAndK S_and_k() {
    // First positive root by bisection: S(1e-6) > 0, S(1) < 0, S strictly
    // decreasing on [0, inf).
    double lo = 1e-6, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (S_function(mid) > 0 ? lo : hi) = mid;
    }
    SAndK out;
    out.eta0 = 0.5 * (lo + hi);

    // Golden-section maximum of f(eps) = c eps^{3/4} S(eps/pi) on [0, pi*eta0].
    auto f = [](double eps) {
        return std::pow(2.0, 1.75) * std::pow(eps, 0.75) / (3.0 * std::pow(kPi, 2.75)) *
               S_function(eps / kPi);
    };
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = kPi * out.eta0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 200; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    out.k = f(0.5 * (a + b));
    return out;
}

TrialExpectation trial_state_expectation(int M, double eps) {
    if (M < 2 || M % 2 != 0) throw domain_error("trial state requires even M >= 2");
    if (!(eps > 0.0 && eps <= kPi / 6.0 + 1e-15))
        throw domain_error("epsilon must lie in (0, pi/6]");

    const double a0 = eps / M;                   // I0 = [0, a0]
    const double c1 = kPi / 2.0;                 // I1 center
    const double h1 = eps / (2.0 * M);           // I1 half width
    const double ulim = std::pow(a0, 0.25);      // p = u^4 substitution limit

    QuadOptions opt;
    opt.abs_tol = 1e-12;
    opt.max_panels = 200000;

    // I00 with p = u^4, q = v^4: the quarter-power factors become polynomial.
    auto f00 = [M](double u, double v) -> std::complex<double> {
        double u4 = u * u * u * u, v4 = v * v * v * v;
        double w = 16.0 * trial_kernel(M, u4 - v4) * (u4 * v * v + u * u * v4);
        return {w, 0.0};
    };
    auto r00 = integrate_2d_c(f00, 0.0, ulim, 0.0, ulim, opt);

    // I01 with p = u^4 only (q stays on I1, away from zero).
    auto f01 = [M](double u, double q) -> std::complex<double> {
        double u4 = u * u * u * u;
        double q4 = std::pow(q, 0.25);
        double w = 4.0 * trial_kernel(M, u4 - q) * (u4 / q4 + u * u * q4);
        return {w, 0.0};
    };
    auto r01 = integrate_2d_c(f01, 0.0, ulim, c1 - h1, c1 + h1, opt);

    // I11 directly: both variables bounded away from zero.
    auto f11 = [M](double p, double q) -> std::complex<double> {
        double r = std::pow(p / q, 0.25);
        double w = trial_kernel(M, p - q) * (r + 1.0 / r);
        return {w, 0.0};
    };
    auto r11 = integrate_2d_c(f11, c1 - h1, c1 + h1, c1 - h1, c1 + h1, opt);

    const double pref = static_cast<double>(M) * M / (4.0 * kPi * eps);
    TrialExpectation out;
    out.value = -pref * (r00.value.real() + 2.0 * r01.value.real() + r11.value.real());
    out.achieved_error = pref * (r00.error + 2.0 * r01.error + r11.error);
    out.converged = r00.converged && r01.converged && r11.converged;
    if (!out.converged) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "quadrature tolerance not met; achieved error %.3e",
                      out.achieved_error);
        out.warning = buf;
    }
    out.analytic_bound = std::pow(2.0, 1.75) * std::pow(eps, 0.75) /
                         (3.0 * std::pow(kPi, 2.75)) * std::pow(static_cast<double>(M), 0.25) *
                         S_function(2.0 * eps / (kPi * M));
    return out;
}

// --- Classical Monte-Carlo comparison --------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

MCResult classical_mc(const Ensemble& ensemble, const TimeGrid& grid, long samples,
                      std::uint64_t seed) {
    if (grid.times().empty()) throw domain_error("classical estimate needs a nonempty grid");
    if (samples < 1) throw domain_error("classical estimate needs a positive sample count");
    if (!ensemble) throw domain_error("classical estimate needs an ensemble");
    const auto& t = grid.times();
    const int folds = grid.fold();

    constexpr long kChunk = 4096;
    long hits = 0;
    for (long chunk = 0, done = 0; done < samples; ++chunk) {
        std::mt19937_64 eng(splitmix64(seed ^ static_cast<std::uint64_t>(chunk)));
        const long want = std::min(kChunk, samples - done);
        for (long i = 0; i < want; ++i) {
            PhasePoint pt = ensemble(eng);
            if (pt.p < 0.0) throw domain_error("ensemble produced a negative momentum");
            bool in = false;
            for (int j = 0; j < folds && !in; ++j) {
                // Wedge j: x(t_{2j-1}) < 0 <= x(t_{2j}) with x(t) = x + 2pt.
                double lo = -2.0 * pt.p * t[static_cast<std::size_t>(2 * j + 1)];
                double hi = -2.0 * pt.p * t[static_cast<std::size_t>(2 * j)];
                in = lo <= pt.x && pt.x < hi;
            }
            if (in) ++hits;
        }
        done += want;
    }
    MCResult out;
    out.hits = hits;
    out.samples = samples;
    double phat = static_cast<double>(hits) / static_cast<double>(samples);
    out.estimate = -phat;
    out.std_error = std::sqrt(phat * (1.0 - phat) / static_cast<double>(samples));
    return out;
}

Ensemble point_mass_ensemble(double x, double p) {
    if (p < 0) throw domain_error("point mass momentum must be >= 0");
    return [x, p](std::mt19937_64&) { return PhasePoint{x, p}; };
}

Ensemble gaussian_exponential_ensemble(double x0, double sx, double pmean) {
    if (!(sx > 0) || !(pmean > 0))
        throw domain_error("ensemble scales must be positive");
    return [x0, sx, pmean](std::mt19937_64& eng) {
        std::normal_distribution<double> nx(x0, sx);
        std::exponential_distribution<double> ep(1.0 / pmean);
        PhasePoint pt;
        pt.x = nx(eng);
        pt.p = ep(eng);
        return pt;
    };
}

Ensemble uniform_box_ensemble(double x0, double x1, double p0, double p1) {
    if (!(x1 > x0) || !(p1 > p0) || p0 < 0)
        throw domain_error("uniform box needs x0 < x1 and 0 <= p0 < p1");
    return [x0, x1, p0, p1](std::mt19937_64& eng) {
        std::uniform_real_distribution<double> ux(x0, x1), up(p0, p1);
        PhasePoint pt;
        pt.x = ux(eng);
        pt.p = up(eng);
        return pt;
    };
}

// --- Theoretical window ------------------------------------------------------------

BoundsReport bounds_report(int M, double c_hi, double c_bm_estimate) {
    if (M < 1) throw domain_error("fold count must be >= 1");
    if (!(c_hi > 0)) throw domain_error("upper constant must be positive");
    BoundsReport out;
    out.M = M;
    out.c_hi = c_hi;
    out.lower = -1.0 - (M - 1) * c_hi;
    out.upper = M * c_hi;
    if (M == 2) {
        out.has_sharp_lower = true;
        out.sharp_lower = -1.0 - c_bm_estimate;
    }
    return out;
}

}  // namespace backflow
