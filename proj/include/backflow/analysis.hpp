#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "backflow/accel.hpp"
#include "backflow/eigen.hpp"

namespace backflow {

// --- Spectral sweeps ----------------------------------------------------------

// One leading-dimension record: extreme eigenvalue balls, their certified
// perturbation radii (valid when `certified`), and the B-normalized extreme
// coefficient vectors with sign/phase fixed for cross-N comparability.
struct SweepRecord {
    int N = 0;
    Real lambda_back{64};  // largest eigenvalue
    Real lambda_over{64};  // smallest eigenvalue
    bool certified = false;
    Real cert_back{64};  // certified |lambda_true - lambda| bound (point value)
    Real cert_over{64};
    std::vector<Complex> vec_back, vec_over;
    double residual_back = 0.0, residual_over = 0.0;
};

struct SpectrumSweep {
    int M = 1;
    TimeGrid grid{{-0.5, 0.5}};
    BasisSpec spec;
    PrecisionPolicy policy;
    std::vector<SweepRecord> records;  // N = 1..Nmax in order
    Real min_gram{64};                 // min Gram eigenvalue ball at Nmax
    Real element_radius{64};

    // The lambda(N) sequences with true index N starting at 1.
    RealSequence back_sequence() const;
    RealSequence over_sequence() const;
};

using SweepProgress = std::function<void(int done, int total)>;

// Builds the operator/Gram pair once at Nmax (resumable through the element
// cache when cache_dir is nonempty), then walks the incremental ladder through
// every leading dimension N = 1..Nmax, attaching extreme eigenpairs and
// perturbation certificates.  element_progress reports matrix entries built,
// solve_progress reports ladder dimensions completed.
SpectrumSweep spectrum_sweep(int M, int Nmax, const BasisSpec& spec,
                             const PrecisionPolicy& policy, const TimeGrid& grid,
                             const std::string& cache_dir = "",
                             const SweepProgress& element_progress = {},
                             const SweepProgress& solve_progress = {});

// Default configuration: equal-spacing grid with T = 1, basis for_fold(M).
SpectrumSweep spectrum_sweep(int M, int Nmax, const PrecisionPolicy& policy,
                             const std::string& cache_dir = "",
                             const SweepProgress& element_progress = {},
                             const SweepProgress& solve_progress = {});

// --- Eigenvector diagnostics ---------------------------------------------------

enum class ProfileScale { none, p34 };  // p34: multiply by p^(3/4)

// Pointwise wavefunction psi(p) = sum_n v_n psi_{n,a,delta}(p), evaluated in
// ball arithmetic at the coefficients' working precision (the coefficients
// oscillate with huge magnitudes, cancelling to an O(1) function value).
// Every p must be positive.
std::vector<std::complex<double>> eigvec_profile(const std::vector<Complex>& coeffs,
                                                 const BasisSpec& spec,
                                                 const std::vector<double>& p_grid,
                                                 ProfileScale scale);

// L2 distance sqrt((va - e^{i phi} vb)^dag P (va - e^{i phi} vb)) minimized
// over the free phase phi, i.e. sqrt(a + b - 2|va^dag P vb|).  The shorter
// vector is zero-padded; the basis parameters must match exactly.
double eigvec_distance(const std::vector<Complex>& va, const BasisSpec& spec_a,
                       const std::vector<Complex>& vb, const BasisSpec& spec_b, long digits);

// --- Analytic trial-state bound -------------------------------------------------

// Expectation value of the M-fold operator in the two-interval step state
// (supported on [0, eps/M] and [pi/2 - eps/2M, pi/2 + eps/2M]) together with
// its closed-form lower bound (2^{7/4} eps^{3/4} / (3 pi^{11/4})) M^{1/4}
// S(2 eps / (pi M)).  M must be even and eps in (0, pi/6].
struct TrialExpectation {
    double value = 0.0;
    double analytic_bound = 0.0;
    double achieved_error = 0.0;  // quadrature error estimate on `value`
    bool converged = true;
    std::string warning;  // nonempty iff a quadrature missed its tolerance
};
TrialExpectation trial_state_expectation(int M, double eps);

// Oscillation kernel sin(2Mx)/(2Mx cos x), extended by continuity over the
// removable singularities; |g| <= 1 everywhere.  M must be even.
double trial_kernel(int M, double x);

// First positive root eta0 of S(eta) = 1 - (31 pi^2/80) eta^{1/4}
// - (5/8) eta - (9 pi^2/176) eta^{5/4}, and the best constant
// k = max_{eps in [0, pi*eta0]} (2^{7/4} eps^{3/4} / (3 pi^{11/4})) S(eps/pi).
struct SAndK {
    double eta0 = 0.0;
    double k = 0.0;
};
SAndK S_and_k();
double S_function(double eta);

// --- Classical Monte-Carlo comparison -------------------------------------------

struct PhasePoint {
    double x = 0.0;
    double p = 0.0;  // must be >= 0
};
using Ensemble = std::function<PhasePoint(std::mt19937_64&)>;

// Free classical motion at mass 1/2: x(t) = x + 2 p t.  The estimate is
// -Prob((x,p) lies in the union of wedges -2 p t_{2j} <= x < -2 p t_{2j-1}),
// i.e. the trajectory is on the negative half-line at t_{2j-1} and the
// positive one at t_{2j}.  Deterministic under seed: samples are drawn in
// fixed 4096-size chunks, each from its own splitmix64-derived engine, so the
// estimate is independent of threading or call pattern.
struct MCResult {
    double estimate = 0.0;
    double std_error = 0.0;
    long hits = 0;
    long samples = 0;
};
MCResult classical_mc(const Ensemble& ensemble, const TimeGrid& grid, long samples,
                      std::uint64_t seed);

Ensemble point_mass_ensemble(double x, double p);
// x ~ Normal(x0, sx), p ~ Exponential(mean pmean), truncated to p >= 0.
Ensemble gaussian_exponential_ensemble(double x0, double sx, double pmean);
Ensemble uniform_box_ensemble(double x0, double x1, double p0, double p1);

// --- Theoretical window ----------------------------------------------------------

// Eigenvalues of the M-fold operator lie in [-1 - (M-1) c_hi, M c_hi] for any
// rigorous upper bound c_hi on the single-interval backflow constant (default
// 0.072).  For M = 2 the lower edge is sharp at -1 - c_BM, reported from the
// configured estimate.
struct BoundsReport {
    int M = 1;
    double lower = 0.0;
    double upper = 0.0;
    double c_hi = 0.0;
    bool has_sharp_lower = false;
    double sharp_lower = 0.0;  // -1 - c_bm_estimate, M = 2 only
};
BoundsReport bounds_report(int M, double c_hi = 0.072, double c_bm_estimate = 0.0384506);

}  // namespace backflow
