#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace ghostfit {

struct QuadOutcome {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;   // estimated absolute error bound
    long evals = 0;       // integrand evaluations consumed
    bool converged = false;
};

// Adaptive Gauss-Kronrod 7/15 integration of a complex integrand over
// [a, b].  Interior breakpoints in `splits` seed the initial subdivision
// (use them for known kinks or narrow features so no panel straddles
// them unseen).  Stops once the summed error estimate drops below
// max(abs_tol, rel_tol * |I|) or the evaluation budget runs out.
QuadOutcome integrate_gk(const std::function<std::complex<double>(double)>& f,
                         double a, double b, std::span<const double> splits,
                         double rel_tol, double abs_tol, long max_evals);

// Spherical Bessel functions j_0..j_nmax at theta >= 0 (upward recurrence
// when theta dominates, Miller's downward recurrence otherwise).
void sph_bessel_array(int nmax, double theta, double* out);

// One panel of a Filon-Legendre decomposition: a degree-(order-1)
// Legendre expansion of a smooth complex function on [center-half,
// center+half], built from 16-point Gauss-Legendre samples.
struct FilonPanel {
    double center = 0.0;
    double half = 0.0;
    std::vector<std::complex<double>> coeff;  // Legendre coefficients a_n
    double tail = 0.0;      // interpolation error estimate (abs, per unit)
    double fn_error = 0.0;  // accumulated integrand evaluation error
    double l1 = 0.0;        // approximate integral of |f| over the panel
};

// Build a panel from function samples; f maps the physical coordinate to
// a complex value and may report its own evaluation error via err_acc.
FilonPanel make_filon_panel(const std::function<std::complex<double>(double, double&)>& f,
                            double lo, double hi, long& evals);

// Integral of panel's interpolant against exp(-i omega t) dt, exact in
// omega via spherical Bessel moments.
std::complex<double> filon_panel_integral(const FilonPanel& p, double omega);

// Gauss-Legendre 16 nodes/weights on [-1, 1] (computed once, cached).
std::span<const double> gl16_nodes();
std::span<const double> gl16_weights();

}  // namespace ghostfit
