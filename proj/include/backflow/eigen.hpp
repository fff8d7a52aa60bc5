#pragma once

#include <memory>
#include <string>
#include <vector>

#include "backflow/pair.hpp"
#include "backflow/prec.hpp"

namespace backflow {

// Internal working digits for a solve at the given dimension.  The Gram
// matrix of this basis family has minimum eigenvalue shrinking like
// 10^(2-0.94N), so its triangular factor inverse amplifies roundoff by about
// 0.47N digits; we budget for that plus a fixed guard so that the residual
// postcondition 10^-(solver_digits-10) holds with margin.  (A fixed guard of
// ~10 digits is not enough at large N: the computed eigenvector norm itself
// grows like the square root of the Gram condition number.)
long internal_solve_digits(long solver_digits, int dim);

// Incremental solver for the definite pencil (A, B) restricted to leading
// principal blocks.  Feeds rows from a MatrixPair; complex Hermitian pairs
// are handled by the standard real doubling (each complex entry becomes a
// 2x2 real block), which keeps every leading block property intact because
// blocks are interleaved per index.
//
// Internals: B = LL^T Cholesky (extended row by row), S = L^-1 A L^-T kept
// incrementally.  `extremes` brackets the lowest/highest eigenvalue of S by
// inertia (Sturm) bisection on its tridiagonal reduction -- congruences
// preserve the inertia of A - lambda B, so these counts are exactly the
// pencil's -- followed by inverse iteration for the vectors.  `full` runs
// cyclic Jacobi to the requested off-diagonal target.  Eigenvalue balls
// carry a posteriori radii: bisection width (or off-norm) plus reduction
// and counting slack scaled by the measured Gram conditioning.
class PencilLadder {
  public:
    PencilLadder(const MatrixPair& pair, long internal_digits);
    ~PencilLadder();
    PencilLadder(PencilLadder&&) noexcept;
    PencilLadder& operator=(PencilLadder&&) noexcept;

    int dim() const;          // rows fed so far (complex/logical dimension)
    void extend_to(int n);    // feed rows until dim() == n

    struct Extremes {
        Real lambda_min{64}, lambda_max{64};
        std::vector<Complex> vec_min, vec_max;  // B-normalized; empty unless requested
        double residual_min = 0.0, residual_max = 0.0;
    };
    // residual_tol_log10: reported pairs must satisfy ||Av - lambda Bv||_2
    // <= 10^residual_tol_log10 (checked at working precision when vectors are
    // computed; violation raises precision_error).
    Extremes extremes(bool want_vectors, long residual_tol_log10);

    struct Full {
        std::vector<Real> eigenvalues;             // ascending
        std::vector<std::vector<Complex>> vectors;  // columns, B-normalized
        std::vector<double> residuals;
    };
    // off_tol_log10: cyclic Jacobi stops when the off-diagonal Frobenius norm
    // is <= 10^off_tol_log10 * max(1, ||S||_F).
    Full full(bool want_vectors, long off_tol_log10, long residual_tol_log10);

    // Ball containing the minimum eigenvalue of the Gram block B_N, inflated
    // by n * 2^b_rad_log2 (Weyl) to account for the element balls.
    Real min_b_eigen(long b_rad_log2);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Result of one generalized eigensolve.
struct SpectrumResult {
    int dim = 0;
    bool extremes_only = false;
    std::vector<Real> eigenvalues;              // ascending balls
    std::vector<std::vector<Complex>> vectors;  // B-normalized columns (may be empty)
    std::vector<double> residuals;              // ||Av - lambda Bv||_2 upper estimates
    Real min_gram_eig{64};
};

enum class SolveMode { full, extremes };

SpectrumResult gevp_solve(const MatrixPair& pair, const PrecisionPolicy& policy, SolveMode mode,
                          bool want_vectors = true);

// First-order perturbation certificate for a definite pair (A, B) whose
// entries are known to entrywise radius element_radius: with
//   C_max = n (1 + lambda_bound^2) (dA^2 + dB^2) / min_sigma^2 < 1/2,
// every eigenvalue satisfies |lambda_i - lambda~_i|^2 <= C_max (1 + 2
// lambda_i^2) / (1 - 2 C_max).  Inputs enter as balls; the certificate uses
// their unfavorable endpoints.
struct ErrorCertificate {
    bool issued = false;
    int n = 0;
    double lambda_bound = 0.0;
    Real c_max{64};
    Real da_inf{64}, db_inf{64}, min_sigma_lower{64};
    long required_digits = 0;  // populated when refused
    std::string message;

    // Certified radius for an eigenvalue ball; requires issued.
    Real radius_for(const Real& lambda) const;
};

ErrorCertificate certify_bounds(int n, double lambda_bound, const Real& da_inf,
                                const Real& db_inf, const Real& min_sigma_lower_ball);

// Spec'd entry point: dA = dB = element_radius, min sigma(B) from the
// result's min_gram_eig lower endpoint.
ErrorCertificate certify(const SpectrumResult& result, const Real& element_radius, int n,
                         double lambda_bound);

}  // namespace backflow
