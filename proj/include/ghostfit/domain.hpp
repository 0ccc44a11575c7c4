#pragma once

#include <complex>

namespace ghostfit {

// Optical layout of one run.  Lengths in mm; hbar = 1 throughout, so
// momenta are quoted in hbar/mm and uncertainty products in hbar^2.
struct ExperimentGeometry {
    double f = 400.0;         // relay lens focal length
    double f_a = 13.5;        // objective focal length, object arm
    double f_b = 25.4;        // lens focal length, scanning arm
    double lambda = 7.95e-4;  // photon wavelength (degenerate pair)
    double w0 = 1.6;          // object-plane Gaussian envelope 1/e half-width
    double wb = 1.23;         // opaque block width

    void validate() const;  // throws ValidationError naming the failed rule
};

// Fit parameters: the two correlation widths plus scan nuisances.
// Parameter order (sigma_plus, sigma_minus, amplitude, center, background)
// is fixed and shared with the fit covariance.
struct CorrelationParams {
    double sigma_plus = 1.0;   // momentum-sum envelope std dev (1/mm)
    double sigma_minus = 50.0; // momentum-difference envelope std dev (1/mm)
    double amplitude = 1.0;
    double center = 0.0;       // scan-axis offset (mm)
    double background = 0.0;

    void validate() const;
};

constexpr int kNumParams = 5;

struct UncertaintyPair {
    double dp_plus = 0.0;       // total-momentum spread (hbar/mm)
    double dx_minus = 0.0;      // relative-position spread (mm)
    double dp_plus_err = 0.0;
    double dx_minus_err = 0.0;
};

struct Verdict {
    double product = 0.0;      // (dx_minus * dp_plus)^2 in hbar^2
    double product_err = 0.0;
    bool entangled = false;    // product < 1
    bool steerable = false;    // product < 1/4
};

// Momentum-sum envelope amplitude, L2-normalized in one dimension:
// (pi sigma^2)^(-1/4) exp(-k^2 / (2 sigma^2)).
double envelope_plus(double kappa_plus, double sigma_plus);

// Momentum-difference envelope, evaluated at its native half-argument.
double envelope_minus_half(double kappa_minus_half, double sigma_minus);

// Pair-correlation amplitude in the rotated momentum coordinates:
// envelope_plus(k+) * envelope_minus(|k-|/2).
double transverse_correlation(double kappa_plus, double kappa_minus,
                              double sigma_plus, double sigma_minus);

// Object-plane transmittance: Gaussian envelope with a centered opaque
// block.  Zero on the closed interval |rho| <= wb/2.
double object_transmittance(double rho_o, double w0, double wb);

// Fourier transform of object_transmittance with the convention
// T~(q) = integral T(rho) exp(-i q rho) drho.  Real for this centered
// even object; evaluated in a scaled form that never overflows.
std::complex<double> object_transmittance_ft(double q, double w0, double wb);

// Joint uncertainties from the fitted envelope widths:
// dp_plus = sigma_plus / sqrt(2), dx_minus = 1 / (sqrt(2) sigma_minus).
UncertaintyPair joint_uncertainties(double sigma_plus, double sigma_minus);

// Classify against the separability (product < 1) and steering
// (product < 1/4) bounds; both inequalities strict.  The product error
// is first-order propagation from the pair's independent errors.
Verdict classify(const UncertaintyPair& pair);

}  // namespace ghostfit
