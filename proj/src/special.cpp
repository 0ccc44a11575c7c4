#include "ghostfit/special.hpp"

#include <cmath>
#include <limits>

#include "ghostfit/errors.hpp"

namespace ghostfit {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589031;
// exp() overflows above ~709.78; leave headroom for the O(1) cofactor.
constexpr double kMaxExpArg = 708.0;

// w(z) for Im(z) >= 0 and Re(z) >= 0.  Power series near the origin,
// Laplace continued fraction far out, and a Gautschi-style shifted
// recurrence in between (the classic region split of Poppe & Wijers).
std::complex<double> wofz_first_quadrant(double x, double y) {
    const double xs = x / 6.3;
    const double ys = y / 4.4;
    const double q2 = xs * xs + ys * ys;

    const double xquad = x * x - y * y;
    const double yquad = 2.0 * x * y;

    double u, v;
    if (q2 < 0.085264) {
        // Maclaurin series of the entire part, times exp(-z^2).
        const double qr = (1.0 - 0.85 * ys) * std::sqrt(q2);
        const int n = static_cast<int>(std::lround(6.0 + 72.0 * qr));
        int j = 2 * n + 1;
        double xsum = 1.0 / j;
        double ysum = 0.0;
        for (int i = n; i >= 1; --i) {
            j -= 2;
            const double xaux = (xsum * xquad - ysum * yquad) / i;
            ysum = (xsum * yquad + ysum * xquad) / i;
            xsum = xaux + 1.0 / j;
        }
        const double u1 = -kTwoOverSqrtPi * (xsum * y + ysum * x) + 1.0;
        const double v1 = kTwoOverSqrtPi * (xsum * x - ysum * y);
        const double daux = std::exp(-xquad);
        const double u2 = daux * std::cos(yquad);
        const double v2 = -daux * std::sin(yquad);
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        double h, h2 = 0.0, qlambda = 0.0;
        int kapn, nu;
        if (q2 > 1.0) {
            // pure continued fraction
            h = 0.0;
            kapn = 0;
            const double qr = std::sqrt(q2);
            nu = static_cast<int>(3.0 + 1442.0 / (26.0 * qr + 77.0));
        } else {
            // shifted recurrence: evaluate at z + i*h, then descend
            const double qr = (1.0 - ys) * std::sqrt(1.0 - q2);
            h = 1.88 * qr;
            h2 = 2.0 * h;
            kapn = static_cast<int>(std::lround(7.0 + 34.0 * qr));
            nu = static_cast<int>(std::lround(16.0 + 26.0 * qr));
        }
        const bool shifted = h > 0.0;
        if (shifted) qlambda = std::pow(h2, kapn);

        double rx = 0.0, ry = 0.0, sx = 0.0, sy = 0.0;
        for (int n = nu; n >= 0; --n) {
            const double np1 = n + 1.0;
            const double tx = y + h + np1 * rx;
            const double ty = x - np1 * ry;
            const double c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if (shifted && n <= kapn) {
                const double t = qlambda + sx;
                sx = rx * t - ry * sy;
                sy = ry * t + rx * sy;
                qlambda /= h2;
            }
        }
        if (shifted) {
            u = kTwoOverSqrtPi * sx;
            v = kTwoOverSqrtPi * sy;
        } else {
            u = kTwoOverSqrtPi * rx;
            v = kTwoOverSqrtPi * ry;
        }
        if (y == 0.0) u = std::exp(-x * x);
    }
    return {u, v};
}

// exp(re) * (cos, sin) of a phase given as an exact product -2*x*y.
// The fma recovers the product's rounding error, which otherwise dominates
// for phases of ~1e7 rad.
std::complex<double> exp_with_phase(double re, double x, double y) {
    const double p = -2.0 * x * y;
    const double pc = std::fma(-2.0 * x, y, -p);
    const double cs = std::cos(p), sn = std::sin(p);
    const double mag = std::exp(re);
    return {mag * (cs - sn * pc), mag * (sn + cs * pc)};
}

}  // namespace

double erf_real(double x) {
    if (!std::isfinite(x)) throw DomainError("erf_real: non-finite argument");
    return std::erf(x);
}

double erfc_real(double x) {
    if (!std::isfinite(x)) throw DomainError("erfc_real: non-finite argument");
    return std::erfc(x);
}

std::complex<double> faddeeva(std::complex<double> z) {
    const double x = z.real();
    const double y = z.imag();
    if (!std::isfinite(x) || !std::isfinite(y))
        throw DomainError("faddeeva: non-finite argument");

    const double ax = std::fabs(x);
    const double ay = std::fabs(y);
    std::complex<double> w = wofz_first_quadrant(ax, ay);

    if (y >= 0.0) {
        // w(-conj z) = conj(w(z)) maps the second quadrant onto the first
        if (x < 0.0) w = std::conj(w);
        return w;
    }

    // lower half plane: w(z) = 2 exp(-z^2) - w(-z)
    const double re_mz2 = (ay - ax) * (ay + ax);  // Re(-z^2), cancellation-safe
    if (re_mz2 > kMaxExpArg)
        throw RangeError("faddeeva: overflow of exp(-z^2) in the lower half plane");
    const std::complex<double> reflect = 2.0 * exp_with_phase(re_mz2, x, y);
    // w(-z): -z has Im > 0; fold its real-part sign as above
    std::complex<double> wm = (x > 0.0) ? std::conj(wofz_first_quadrant(ax, ay)) : w;
    return reflect - wm;
}

std::complex<double> erfc_complex(std::complex<double> z) {
    const double x = z.real();
    const double y = z.imag();
    if (!std::isfinite(x) || !std::isfinite(y))
        throw DomainError("erfc_complex: non-finite argument");

    if (x < 0.0) {
        // erfc(-z) = 2 - erfc(z) keeps exp(-z^2) and w(iz) well scaled
        return 2.0 - erfc_complex(-z);
    }
    const double ax = std::fabs(x), ay = std::fabs(y);
    const double re_mz2 = (ay - ax) * (ay + ax);  // Re(-z^2), cancellation-safe
    if (re_mz2 > kMaxExpArg)
        throw RangeError("erfc_complex: result overflows double range");
    // iz = (-y, x) lies in the upper half plane for x >= 0
    return exp_with_phase(re_mz2, x, y) * faddeeva(std::complex<double>(-y, x));
}

}  // namespace ghostfit
