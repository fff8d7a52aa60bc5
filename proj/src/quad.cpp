#include "backflow/quad.hpp"

#include <cmath>
#include <vector>

namespace backflow {

namespace {

// Kronrod-15 abscissae (positive half) and weights; the odd-indexed nodes
// x[1], x[3], ... are the Gauss-7 points with weights wg.
const double kX[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                      0.741531185599394, 0.586087235467691, 0.405845151377397,
                      0.207784955007898, 0.0};
const double kWK[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                       0.140653259715525, 0.169004726639267, 0.190350578064785,
                       0.204432940075298, 0.209482141084728};
const double kWG[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

template <typename V>
void gk15(const std::function<V(double)>& f, double a, double b, V& k15, double& err) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    V sk = kWK[7] * f(c);
    V sg = kWG[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        V lo = f(c - h * kX[i]);
        V hi = f(c + h * kX[i]);
        sk += kWK[i] * (lo + hi);
        if (i % 2 == 1) sg += kWG[i / 2] * (lo + hi);
    }
    k15 = h * sk;
    err = std::abs(h * (sk - sg));
}

// Worst-first refinement over a panel vector (panel counts are modest, so a
// linear max scan is cheaper than heap bookkeeping with a running error sum).
template <typename V>
void run_1d_vec(const std::function<V(double)>& f, double a, double b, const QuadOptions& opt,
                V& value, double& error, bool& converged, std::size_t& count) {
    struct P {
        double err, a, b;
        V v;
    };
    std::vector<P> panels;
    count = 0;
    auto make = [&](double lo, double hi) {
        V v;
        double e;
        gk15<V>(f, lo, hi, v, e);
        ++count;
        return P{e, lo, hi, v};
    };
    panels.push_back(make(a, b));
    double total = panels[0].err;
    while (total > opt.abs_tol && count < opt.max_panels) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        P w = panels[worst];
        double m = 0.5 * (w.a + w.b);
        if (m <= w.a || m >= w.b) break;  // double resolution exhausted
        panels[worst] = make(w.a, m);
        panels.push_back(make(m, w.b));
        total = 0.0;
        for (const P& p : panels) total += p.err;
    }
    V sum = V(0);
    for (const P& p : panels) sum += p.v;
    value = sum;
    error = total;
    converged = total <= opt.abs_tol;
}

}  // namespace

QuadOutcome integrate_1d(const std::function<double(double)>& f, double a, double b,
                         const QuadOptions& opt) {
    QuadOutcome out;
    run_1d_vec<double>(f, a, b, opt, out.value, out.error, out.converged, out.panels);
    return out;
}

QuadOutcomeC integrate_1d_c(const std::function<std::complex<double>(double)>& f, double a,
                            double b, const QuadOptions& opt) {
    QuadOutcomeC out;
    run_1d_vec<std::complex<double>>(f, a, b, opt, out.value, out.error, out.converged,
                                     out.panels);
    return out;
}

QuadOutcomeC integrate_2d_c(const std::function<std::complex<double>(double, double)>& f,
                            double ax, double bx, double ay, double by, const QuadOptions& opt) {
    using C = std::complex<double>;
    struct R {
        double err, ax, bx, ay, by;
        C v;
    };
    std::size_t count = 0;
    auto make = [&](double x0, double x1, double y0, double y1) {
        double cx = 0.5 * (x0 + x1), hx = 0.5 * (x1 - x0);
        double cy = 0.5 * (y0 + y1), hy = 0.5 * (y1 - y0);
        double nx[15], wkx[15], wky[15];
        double ny[15];
        for (int i = 0; i < 7; ++i) {
            nx[i] = cx - hx * kX[i];
            nx[14 - i] = cx + hx * kX[i];
            ny[i] = cy - hy * kX[i];
            ny[14 - i] = cy + hy * kX[i];
            wkx[i] = wkx[14 - i] = kWK[i];
            wky[i] = wky[14 - i] = kWK[i];
        }
        nx[7] = cx;
        ny[7] = cy;
        wkx[7] = wky[7] = kWK[7];
        C vals[15][15];
        for (int i = 0; i < 15; ++i)
            for (int j = 0; j < 15; ++j) vals[i][j] = f(nx[i], ny[j]);
        C k(0.0, 0.0), g(0.0, 0.0);
        for (int i = 0; i < 15; ++i)
            for (int j = 0; j < 15; ++j) k += wkx[i] * wky[j] * vals[i][j];
        // Gauss-7 x Gauss-7 on the odd-indexed (Gauss) nodes 1,3,...,13.
        for (int i = 1; i < 15; i += 2)
            for (int j = 1; j < 15; j += 2)
                g += kWG[(i < 8 ? i : 14 - i) / 2] * kWG[(j < 8 ? j : 14 - j) / 2] * vals[i][j];
        C val = hx * hy * k;
        double err = std::abs(hx * hy * (k - g));
        count += 225;
        return R{err, x0, x1, y0, y1, val};
    };
    std::vector<R> rects;
    rects.push_back(make(ax, bx, ay, by));
    double total = rects[0].err;
    std::size_t budget = opt.max_panels * 225;
    while (total > opt.abs_tol && count < budget) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < rects.size(); ++i)
            if (rects[i].err > rects[worst].err) worst = i;
        R w = rects[worst];
        double lenx = w.bx - w.ax, leny = w.by - w.ay;
        if (lenx >= leny) {
            double m = 0.5 * (w.ax + w.bx);
            if (m <= w.ax || m >= w.bx) break;
            rects[worst] = make(w.ax, m, w.ay, w.by);
            rects.push_back(make(m, w.bx, w.ay, w.by));
        } else {
            double m = 0.5 * (w.ay + w.by);
            if (m <= w.ay || m >= w.by) break;
            rects[worst] = make(w.ax, w.bx, w.ay, m);
            rects.push_back(make(w.ax, w.bx, m, w.by));
        }
        total = 0.0;
        for (const R& r : rects) total += r.err;
    }
    QuadOutcomeC out;
    C sum(0.0, 0.0);
    for (const R& r : rects) sum += r.v;
    out.value = sum;
    out.error = total;
    out.converged = total <= opt.abs_tol;
    out.panels = rects.size();
    return out;
}

}  // namespace backflow
