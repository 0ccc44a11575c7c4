#include "ghostfit/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>

namespace ghostfit {

namespace {

// Gauss 7 / Kronrod 15 on [-1, 1].  Abscissae and weights from the
// standard QUADPACK tables.
constexpr std::array<double, 8> kKronrodX = {
    0.991455371120812639206854697526, 0.949107912342758524526189684048,
    0.864864423359769072789712788641, 0.741531185599394439863864773281,
    0.586087235467691130294144838259, 0.405845151377397166906606412077,
    0.207784955007898467600689403773, 0.0};
constexpr std::array<double, 8> kKronrodW = {
    0.022935322010529224963732008059, 0.063092092629978553290700663189,
    0.104790010322250183839876322542, 0.140653259715525918745189590510,
    0.169004726639267902826583426599, 0.190350578064785409913256402421,
    0.204432940075298892414161999234, 0.209482141084727828012999174892};
constexpr std::array<double, 4> kGaussW = {
    0.129484966168869693270611432679, 0.279705391489276667901467771424,
    0.381830050505118944950369775489, 0.417959183673469387755102040816};

struct Panel {
    double a, b;
    std::complex<double> value;
    double error;
    double l1;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<std::complex<double>(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::complex<double> kron{0.0, 0.0}, gauss{0.0, 0.0};
    double l1 = 0.0;

    const std::complex<double> fc = f(mid);
    kron += kKronrodW[7] * fc;
    gauss += kGaussW[3] * fc;
    l1 += kKronrodW[7] * std::abs(fc);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kKronrodX[i];
        const std::complex<double> lo = f(mid - dx);
        const std::complex<double> hi = f(mid + dx);
        kron += kKronrodW[i] * (lo + hi);
        l1 += kKronrodW[i] * (std::abs(lo) + std::abs(hi));
        if (i % 2 == 1) gauss += kGaussW[i / 2] * (lo + hi);
    }
    kron *= h;
    gauss *= h;
    l1 *= std::fabs(h);
    return {a, b, kron, std::abs(kron - gauss), l1};
}

}  // namespace

QuadOutcome integrate_gk(const std::function<std::complex<double>(double)>& f,
                         double a, double b, std::span<const double> splits,
                         double rel_tol, double abs_tol, long max_evals) {
    QuadOutcome out;
    if (!(b > a)) {
        out.converged = true;
        return out;
    }

    std::vector<double> knots{a, b};
    for (double s : splits)
        if (s > a && s < b) knots.push_back(s);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::priority_queue<Panel> heap;
    std::complex<double> total{0.0, 0.0};
    double err_sum = 0.0, l1_sum = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (out.evals + 15 > max_evals) {
            out.value = total;
            out.error = err_sum;
            return out;  // budget spent before the domain was even covered
        }
        Panel p = gk15(f, knots[i], knots[i + 1]);
        out.evals += 15;
        total += p.value;
        err_sum += p.error;
        l1_sum += p.l1;
        heap.push(p);
    }

    const double min_width = 1e-13 * (b - a);
    while (true) {
        const double target = std::max(abs_tol, rel_tol * std::abs(total));
        if (err_sum <= target) {
            out.converged = true;
            break;
        }
        if (out.evals + 30 > max_evals) break;
        Panel worst = heap.top();
        if (worst.b - worst.a < min_width) break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = gk15(f, worst.a, mid);
        Panel right = gk15(f, mid, worst.b);
        out.evals += 30;
        total += left.value + right.value - worst.value;
        err_sum += left.error + right.error - worst.error;
        l1_sum += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
    }
    out.value = total;
    out.error = err_sum;
    return out;
}

void sph_bessel_array(int nmax, double theta, double* out) {
    if (theta < 1e-7) {
        // series: j_n = theta^n / (2n+1)!! * (1 - theta^2/(2(2n+3)))
        double dfact = 1.0;  // (2n+1)!!
        double pw = 1.0;
        for (int n = 0; n <= nmax; ++n) {
            if (n > 0) {
                dfact *= (2 * n + 1);
                pw *= theta;
            }
            out[n] = pw / dfact * (1.0 - theta * theta / (2.0 * (2 * n + 3)));
        }
        return;
    }

    const double j0 = std::sin(theta) / theta;
    if (theta > nmax + 2.0) {
        // upward recurrence, stable while n < theta
        double jm1 = j0;
        double j1 = std::sin(theta) / (theta * theta) - std::cos(theta) / theta;
        out[0] = jm1;
        if (nmax >= 1) out[1] = j1;
        for (int n = 2; n <= nmax; ++n) {
            const double jn = (2.0 * n - 1.0) / theta * j1 - jm1;
            out[n] = jn;
            jm1 = j1;
            j1 = jn;
        }
        return;
    }

    // Miller's downward recurrence
    const int start = nmax + 16 + static_cast<int>(theta);
    double jp = 0.0, jc = 1e-280;
    std::vector<double> tmp(static_cast<std::size_t>(start) + 1, 0.0);
    for (int n = start; n >= 0; --n) {
        const double jm = (2.0 * n + 3.0) / theta * jc - jp;
        jp = jc;
        jc = jm;
        if (n <= nmax + 1) tmp[n] = jm;  // tmp[n] = unnormalized j_n
        if (std::fabs(jc) > 1e260) {     // rescale to avoid overflow
            jp /= 1e260;
            jc /= 1e260;
            for (auto& v : tmp) v /= 1e260;
        }
    }
    const double scale = j0 / tmp[0];
    for (int n = 0; n <= nmax; ++n) out[n] = tmp[n] * scale;
}

namespace {

constexpr int kGlOrder = 16;

struct Gl16 {
    std::array<double, kGlOrder> x{};
    std::array<double, kGlOrder> w{};
    Gl16() {
        // Newton iteration on P_16 from Chebyshev starting points
        const int n = kGlOrder;
        for (int i = 0; i < n / 2; ++i) {
            double xi = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double p0 = 0.0, p1 = 0.0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = xi;
                for (int k = 2; k <= n; ++k) {
                    const double pk = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
                const double step = p1 / dp;
                xi -= step;
                if (std::fabs(step) < 1e-15) break;
            }
            p0 = 1.0;
            p1 = xi;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            x[i] = -xi;
            x[n - 1 - i] = xi;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
    }
};

const Gl16& gl16() {
    static const Gl16 g;
    return g;
}

}  // namespace

std::span<const double> gl16_nodes() { return gl16().x; }
std::span<const double> gl16_weights() { return gl16().w; }

FilonPanel make_filon_panel(const std::function<std::complex<double>(double, double&)>& f,
                            double lo, double hi, long& evals) {
    FilonPanel p;
    p.center = 0.5 * (lo + hi);
    p.half = 0.5 * (hi - lo);
    p.coeff.assign(kGlOrder, {0.0, 0.0});

    const auto& g = gl16();
    std::array<std::complex<double>, kGlOrder> fv;
    double fn_err = 0.0;
    for (int j = 0; j < kGlOrder; ++j) {
        double e = 0.0;
        fv[j] = f(p.center + p.half * g.x[j], e);
        fn_err += g.w[j] * e;
        p.l1 += g.w[j] * std::abs(fv[j]);
    }
    p.l1 *= p.half;
    p.fn_error = fn_err * p.half;

    // project onto Legendre polynomials: a_n = (2n+1)/2 sum w_j P_n(x_j) f_j
    std::array<double, kGlOrder> pk0, pk1;
    for (int j = 0; j < kGlOrder; ++j) {
        pk0[j] = 1.0;
        pk1[j] = g.x[j];
    }
    for (int n = 0; n < kGlOrder; ++n) {
        std::complex<double> acc{0.0, 0.0};
        for (int j = 0; j < kGlOrder; ++j) {
            const double pn = (n == 0) ? pk0[j] : pk1[j];
            acc += g.w[j] * pn * fv[j];
        }
        p.coeff[n] = 0.5 * (2.0 * n + 1.0) * acc;
        if (n >= 1) {
            for (int j = 0; j < kGlOrder; ++j) {
                const double pn1 = ((2.0 * n + 1.0) * g.x[j] * pk1[j] - n * pk0[j]) / (n + 1.0);
                pk0[j] = pk1[j];
                pk1[j] = pn1;
            }
        }
    }

    // tail of the Legendre expansion as the interpolation error proxy
    p.tail = 2.0 * (std::abs(p.coeff[kGlOrder - 3]) + std::abs(p.coeff[kGlOrder - 2]) +
                    std::abs(p.coeff[kGlOrder - 1]));
    evals += kGlOrder;
    return p;
}

std::complex<double> filon_panel_integral(const FilonPanel& p, double omega) {
    // int_{-1}^{1} P_n(x) exp(-i theta x) dx = 2 (-i)^n j_n(theta)
    const double theta = omega * p.half;
    const double at = std::fabs(theta);
    std::array<double, kGlOrder> jn;
    sph_bessel_array(kGlOrder - 1, at, jn.data());

    std::complex<double> sum{0.0, 0.0};
    std::complex<double> phase{1.0, 0.0};  // (-i)^n for theta >= 0
    const std::complex<double> step = (theta >= 0.0) ? std::complex<double>(0.0, -1.0)
                                                     : std::complex<double>(0.0, 1.0);
    for (int n = 0; n < kGlOrder; ++n) {
        sum += p.coeff[n] * 2.0 * phase * jn[n];
        phase *= step;
    }
    // translate to the panel center: exp(-i omega c), with fma-corrected phase
    const double ph = -omega * p.center;
    const double pc = std::fma(-omega, p.center, -ph);
    const std::complex<double> rot{std::cos(ph) - std::sin(ph) * pc,
                                   std::sin(ph) + std::cos(ph) * pc};
    return p.half * rot * sum;
}

}  // namespace ghostfit
