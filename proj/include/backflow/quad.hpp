#pragma once

#include <complex>
#include <cstddef>
#include <functional>

namespace backflow {

// Double-precision adaptive Gauss(7)/Kronrod(15) quadrature.  Worst-panel
// bisection driven by the |K15 - G7| error estimate; not certified, used for
// independent numerical oracles and diagnostics only.
struct QuadOptions {
    double abs_tol = 1e-10;
    std::size_t max_panels = 400000;  // total panel budget
};

struct QuadOutcome {
    double value = 0.0;
    double error = 0.0;      // accumulated estimate, upper-bound flavored
    bool converged = false;  // error <= abs_tol within budget
    std::size_t panels = 0;
};

struct QuadOutcomeC {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;
    bool converged = false;
    std::size_t panels = 0;
};

QuadOutcome integrate_1d(const std::function<double(double)>& f, double a, double b,
                         const QuadOptions& opt = {});

QuadOutcomeC integrate_1d_c(const std::function<std::complex<double>(double)>& f, double a,
                            double b, const QuadOptions& opt = {});

// Adaptive rectangles with tensor 15x15 / 7x7 rules; splits the longer side.
QuadOutcomeC integrate_2d_c(const std::function<std::complex<double>(double, double)>& f,
                            double ax, double bx, double ay, double by,
                            const QuadOptions& opt = {});

}  // namespace backflow
