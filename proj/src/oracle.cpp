#include "ghostfit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ghostfit/errors.hpp"
#include "ghostfit/quadrature.hpp"

namespace ghostfit {

namespace {

constexpr double kPi = std::numbers::pi;

struct Gaussian {
    double mu;
    double s;
};

// product of Gaussian factors is a Gaussian: precision-weighted center
Gaussian combine(std::span<const Gaussian> parts) {
    double wsum = 0.0, msum = 0.0;
    for (const auto& p : parts) {
        const double w = 1.0 / (p.s * p.s);
        wsum += w;
        msum += w * p.mu;
    }
    return {msum / wsum, 1.0 / std::sqrt(wsum)};
}

struct Layout {
    double alpha;  // object-plane coordinate per unit kappa_s
    double kedge;  // block edge in kappa_s (0 when no block)
    double sT;     // std of the object Gaussian envelope in kappa_s
};

Layout layout_of(const ExperimentGeometry& g) {
    Layout l;
    l.alpha = g.lambda * g.f / (2.0 * kPi);
    l.kedge = g.wb > 0.0 ? kPi * g.wb / (g.lambda * g.f) : 0.0;
    l.sT = std::numbers::sqrt2 * kPi * g.w0 / (g.lambda * g.f);
    return l;
}

void append_window_splits(std::vector<double>& splits, const Gaussian& win,
                          const Layout& l) {
    for (double k : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0})
        splits.push_back(win.mu + k * win.s);
    if (l.kedge > 0.0) {
        splits.push_back(-l.kedge);
        splits.push_back(l.kedge);
    }
}

// integration range for a product-of-Gaussians integrand, extended to
// keep the block edges covered (the mass next to an edge matters even
// when the combined window would end short of it)
std::pair<double, double> kappa_s_range(const Gaussian& win, const Layout& l, double t) {
    double lo = win.mu - t * win.s;
    double hi = win.mu + t * win.s;
    if (l.kedge > 0.0) {
        lo = std::min(lo, -l.kedge - t * win.s);
        hi = std::max(hi, l.kedge + t * win.s);
    }
    return {lo, hi};
}

double norm_plus(double sp) { return std::pow(kPi * sp * sp, -0.25); }

// envelope product without the domain checks of the public functions;
// the oracle validates once per call
double correlation_bare(double kplus, double kminus, double sp, double sm) {
    const double a = kplus / sp;
    const double b = 0.5 * kminus / sm;
    return norm_plus(sp) * norm_plus(sm) * std::exp(-0.5 * (a * a + b * b));
}

double transmittance_bare(double rho, double w0, double wb) {
    if (wb > 0.0 && std::fabs(rho) <= 0.5 * wb) return 0.0;
    const double t = rho / w0;
    return std::exp(-t * t);
}

void validate_inputs(const ExperimentGeometry& g, double sp, double sm,
                     const QuadratureSpec& quad) {
    g.validate();
    quad.validate();
    if (!(sp > 0.0) || !(sm > 0.0))
        throw DomainError("oracle: sigma_plus and sigma_minus must be positive");
}

// ---- interference: smooth kappa_as profile + oscillatory moments ----

struct Decomposition {
    std::vector<FilonPanel> panels;
    double l1 = 0.0;         // approximate integral of |F|
    double err = 0.0;        // interpolation + inner-quadrature error bound
    bool converged = false;
    long evals = 0;
};

// F(kappa_as) = integral over kappa_s of the correlation ridge times the
// object transfer factor and Alice's phase.
Decomposition decompose_inner_profile(double phase_a, const ExperimentGeometry& g,
                                      double sp, double sm, const QuadratureSpec& quad) {
    const Layout l = layout_of(g);
    const double t = quad.truncation;
    const double R = t * (std::min(sp, 2.0 * sm) + l.sT);
    const double inner_tol = 0.1 * quad.rel_tol;

    Decomposition dec;
    long evals = 0;
    bool inner_ok = true;
    const long budget = quad.max_evals;

    auto profile = [&](double kas, double& err_out) -> std::complex<double> {
        const Gaussian win = combine(std::array{Gaussian{-kas, sp}, Gaussian{kas, 2.0 * sm},
                                                Gaussian{0.0, l.sT}});
        auto [lo, hi] = kappa_s_range(win, l, t);
        std::vector<double> splits;
        append_window_splits(splits, win, l);
        auto f = [&](double ks) -> std::complex<double> {
            const double c = correlation_bare(ks + kas, ks - kas, sp, sm) *
                             transmittance_bare(l.alpha * ks, g.w0, g.wb);
            if (phase_a == 0.0) return {c, 0.0};
            const double ph = -phase_a * ks;
            return {c * std::cos(ph), c * std::sin(ph)};
        };
        QuadOutcome q = integrate_gk(f, lo, hi, splits, inner_tol, 0.0,
                                     std::max<long>(budget - evals, 15));
        evals += q.evals;
        if (!q.converged) inner_ok = false;
        err_out = q.error;
        return q.value;
    };

    // seed knots: the block-transition neighborhoods (the correlation
    // window slides across an edge near kappa_as = -+kedge) plus a coarse
    // uniform fill
    std::vector<double> knots{-R, 0.0, R};
    if (l.kedge > 0.0 && l.kedge < R) {
        for (double s : {-6.0, -2.0, 0.0, 2.0, 6.0}) {
            knots.push_back(l.kedge + s * sp);
            knots.push_back(-l.kedge - s * sp);
        }
    }
    const double coarse = R / 8.0;
    for (double x = -R + coarse; x < R - 0.5 * coarse; x += coarse) knots.push_back(x);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    knots.erase(std::remove_if(knots.begin(), knots.end(),
                               [&](double x) { return x < -R || x > R; }),
                knots.end());

    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (evals >= budget) {
            inner_ok = false;
            break;
        }
        dec.panels.push_back(make_filon_panel(profile, knots[i], knots[i + 1], evals));
    }

    auto panel_err = [](const FilonPanel& p) { return p.tail * p.half + p.fn_error; };
    const double min_width = 1e-10 * R;
    while (true) {
        double total_err = 0.0, l1 = 0.0;
        std::size_t worst = 0;
        double worst_err = -1.0;
        for (std::size_t i = 0; i < dec.panels.size(); ++i) {
            const double e = panel_err(dec.panels[i]);
            total_err += e;
            l1 += dec.panels[i].l1;
            if (e > worst_err && dec.panels[i].half > min_width) {
                worst_err = e;
                worst = i;
            }
        }
        dec.l1 = l1;
        dec.err = total_err;
        if (inner_ok && total_err <= quad.rel_tol * std::max(l1, 1e-300)) {
            dec.converged = true;
            break;
        }
        if (!inner_ok || evals + 10000 > budget || worst_err < 0.0) break;
        FilonPanel p = dec.panels[worst];
        const double lo = p.center - p.half, hi = p.center + p.half;
        dec.panels[worst] = make_filon_panel(profile, lo, p.center, evals);
        dec.panels.insert(dec.panels.begin() + static_cast<long>(worst) + 1,
                          make_filon_panel(profile, p.center, hi, evals));
    }
    dec.evals = evals;
    return dec;
}

std::complex<double> decomposition_value(const Decomposition& dec, double omega) {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& p : dec.panels) acc += filon_panel_integral(p, omega);
    return acc;
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(truncation >= 4.0))
        throw ValidationError("quadrature.truncation must be >= 4");
    if (!(rel_tol > 1e-12) || !(rel_tol < 1e-2))
        throw ValidationError("quadrature.rel_tol must lie in (1e-12, 1e-2)");
    if (!(max_evals > 0))
        throw ValidationError("quadrature.max_evals must be positive");
}

OracleCurve oracle_interference_curve(double rho_a, std::span<const double> rho_bs,
                                      const ExperimentGeometry& g, double sigma_plus,
                                      double sigma_minus, const QuadratureSpec& quad) {
    validate_inputs(g, sigma_plus, sigma_minus, quad);
    const double phase_a = (g.f / g.f_a) * rho_a;
    Decomposition dec = decompose_inner_profile(phase_a, g, sigma_plus, sigma_minus, quad);

    OracleCurve out;
    out.converged = dec.converged;
    out.evals = dec.evals;
    out.g2.reserve(rho_bs.size());
    out.g2_error.reserve(rho_bs.size());
    for (double rb : rho_bs) {
        const double omega = (g.f / g.f_b) * rb;
        const std::complex<double> amp = decomposition_value(dec, omega);
        out.g2.push_back(std::norm(amp));
        out.g2_error.push_back(2.0 * std::abs(amp) * dec.err + dec.err * dec.err);
    }
    return out;
}

double oracle_interference_g2(double rho_a, double rho_b, const ExperimentGeometry& g,
                              double sigma_plus, double sigma_minus,
                              const QuadratureSpec& quad) {
    const double pts[1] = {rho_b};
    OracleCurve c = oracle_interference_curve(rho_a, pts, g, sigma_plus, sigma_minus, quad);
    if (!c.converged)
        throw ConvergenceError("interference oracle: evaluation budget exhausted",
                               c.g2[0], c.g2_error[0]);
    return c.g2[0];
}

double oracle_interference_g2_rotated(double rho_a, double rho_b,
                                      const ExperimentGeometry& g, double sigma_plus,
                                      double sigma_minus, const QuadratureSpec& quad) {
    validate_inputs(g, sigma_plus, sigma_minus, quad);
    const Layout l = layout_of(g);
    const double t = quad.truncation;
    const double sp = sigma_plus, sm = sigma_minus;
    const double a = (g.f / g.f_a) * rho_a;
    const double b = (g.f / g.f_b) * rho_b;
    const double omega_u = 0.5 * (a + b);
    const double omega_v = 0.5 * (a - b);
    const double inner_tol = 0.1 * quad.rel_tol;

    // T's Gaussian has std 2 sT in the sum coordinate u + v
    const double Rv = t * std::min(2.0 * sm, sp + 2.0 * l.sT);
    long evals = 0;
    bool inner_ok = true;
    const long budget = quad.max_evals;

    auto profile = [&](double v, double& err_out) -> std::complex<double> {
        const Gaussian win = combine(std::array{Gaussian{0.0, sp}, Gaussian{-v, 2.0 * l.sT}});
        double lo = win.mu - t * win.s, hi = win.mu + t * win.s;
        std::vector<double> splits;
        for (double k : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0})
            splits.push_back(win.mu + k * win.s);
        if (l.kedge > 0.0) {
            const double e1 = 2.0 * l.kedge - v, e2 = -2.0 * l.kedge - v;
            lo = std::min(lo, e2 - t * win.s);
            hi = std::max(hi, e1 + t * win.s);
            splits.push_back(e1);
            splits.push_back(e2);
        }
        // oscillation along u: seed panels finer than a period
        if (omega_u != 0.0) {
            const double period = 2.0 * kPi / std::fabs(omega_u);
            for (double x = lo; x < hi; x += 0.5 * period) splits.push_back(x);
        }
        const double em = norm_plus(sm);
        auto f = [&](double u) -> std::complex<double> {
            const double uu = u / sp;
            const double vv = 0.5 * v / sm;
            const double c = norm_plus(sp) * std::exp(-0.5 * uu * uu) * em *
                             std::exp(-0.5 * vv * vv) *
                             transmittance_bare(0.5 * l.alpha * (u + v), g.w0, g.wb);
            if (omega_u == 0.0) return {c, 0.0};
            const double ph = -omega_u * u;
            return {c * std::cos(ph), c * std::sin(ph)};
        };
        QuadOutcome q = integrate_gk(f, lo, hi, splits, inner_tol, 0.0,
                                     std::max<long>(budget - evals, 15));
        evals += q.evals;
        if (!q.converged) inner_ok = false;
        err_out = q.error;
        return q.value;
    };

    std::vector<double> knots{-Rv, 0.0, Rv};
    const double coarse = Rv / 8.0;
    for (double x = -Rv + coarse; x < Rv - 0.5 * coarse; x += coarse) knots.push_back(x);
    if (l.kedge > 0.0) {
        for (double s : {-4.0, 0.0, 4.0}) {
            const double e = 2.0 * l.kedge + s * sp;
            if (e < Rv) knots.push_back(e);
            if (-e > -Rv) knots.push_back(-e);
        }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::vector<FilonPanel> panels;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (evals >= budget) {
            inner_ok = false;
            break;
        }
        panels.push_back(make_filon_panel(profile, knots[i], knots[i + 1], evals));
    }

    auto panel_err = [](const FilonPanel& p) { return p.tail * p.half + p.fn_error; };
    bool converged = false;
    double total_err = 0.0;
    while (true) {
        total_err = 0.0;
        double l1 = 0.0, worst_err = -1.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            const double e = panel_err(panels[i]);
            total_err += e;
            l1 += panels[i].l1;
            if (e > worst_err && panels[i].half > 1e-10 * Rv) {
                worst_err = e;
                worst = i;
            }
        }
        if (inner_ok && total_err <= quad.rel_tol * std::max(l1, 1e-300)) {
            converged = true;
            break;
        }
        if (!inner_ok || evals + 10000 > budget || worst_err < 0.0) break;
        FilonPanel p = panels[worst];
        const double lo = p.center - p.half, hi = p.center + p.half;
        panels[worst] = make_filon_panel(profile, lo, p.center, evals);
        panels.insert(panels.begin() + static_cast<long>(worst) + 1,
                      make_filon_panel(profile, p.center, hi, evals));
    }

    std::complex<double> acc{0.0, 0.0};
    for (const auto& p : panels) acc += filon_panel_integral(p, omega_v);
    acc *= 0.5;  // Jacobian of (kappa_s, kappa_as) -> (kappa_plus, kappa_minus)
    total_err *= 0.5;
    const double g2 = std::norm(acc);
    const double bound = 2.0 * std::abs(acc) * total_err + total_err * total_err;
    if (!converged)
        throw ConvergenceError("rotated interference oracle: budget exhausted", g2, bound);
    return g2;
}

double oracle_imaging_g2(double rho_a, double rho_b, const ExperimentGeometry& g,
                         double sigma_plus, double sigma_minus,
                         const QuadratureSpec& quad) {
    validate_inputs(g, sigma_plus, sigma_minus, quad);
    const Layout l = layout_of(g);
    const double t = quad.truncation;
    const double sp = sigma_plus, sm = sigma_minus;
    const double phase_a = (g.f / g.f_a) * rho_a;
    const double kpin = 2.0 * kPi * rho_b / (g.lambda * g.f);

    const Gaussian win = combine(std::array{Gaussian{-kpin, sp}, Gaussian{kpin, 2.0 * sm},
                                            Gaussian{0.0, l.sT}});
    auto [lo, hi] = kappa_s_range(win, l, t);
    std::vector<double> splits;
    append_window_splits(splits, win, l);

    auto f = [&](double ks) -> std::complex<double> {
        const double c = correlation_bare(ks + kpin, ks - kpin, sp, sm) *
                         transmittance_bare(l.alpha * ks, g.w0, g.wb);
        if (phase_a == 0.0) return {c, 0.0};
        const double ph = -phase_a * ks;
        return {c * std::cos(ph), c * std::sin(ph)};
    };
    QuadOutcome q = integrate_gk(f, lo, hi, splits, quad.rel_tol, 0.0, quad.max_evals);
    const double g2 = std::norm(q.value);
    const double bound = 2.0 * std::abs(q.value) * q.error + q.error * q.error;
    if (!q.converged)
        throw ConvergenceError("imaging oracle: evaluation budget exhausted", g2, bound);
    return g2;
}

OracleCurve oracle_imaging_curve(double rho_a, std::span<const double> rho_bs,
                                 const ExperimentGeometry& g, double sigma_plus,
                                 double sigma_minus, const QuadratureSpec& quad) {
    OracleCurve out;
    out.g2.reserve(rho_bs.size());
    out.g2_error.reserve(rho_bs.size());
    for (double rb : rho_bs) {
        try {
            out.g2.push_back(oracle_imaging_g2(rho_a, rb, g, sigma_plus, sigma_minus, quad));
            out.g2_error.push_back(0.0);
        } catch (const ConvergenceError& e) {
            out.g2.push_back(e.estimate);
            out.g2_error.push_back(e.error_bound);
            out.converged = false;
        }
    }
    return out;
}

}  // namespace ghostfit
