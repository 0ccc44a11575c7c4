#pragma once

#include <span>
#include <vector>

#include "ghostfit/domain.hpp"

namespace ghostfit {

// Controls for the brute-force quadrature of the pre-integration
// correlation functions.  rel_tol is taken relative to the L1 scale of
// the integrand, so fully cancelled far-tail points are resolved to that
// absolute level rather than chased to impossible pointwise precision.
struct QuadratureSpec {
    double truncation = 8.0;   // window half-width in envelope std devs
    double rel_tol = 1e-6;
    long max_evals = 8'000'000;

    void validate() const;
};

struct OracleCurve {
    std::vector<double> g2;
    std::vector<double> g2_error;  // absolute error bound per point
    bool converged = true;
    long evals = 0;
};

// |double integral over (kappa_s, kappa_as) of
//   exp(-i (f/f_a) kappa_s rho_a) exp(-i (f/f_b) kappa_as rho_b)
//   * C_perp(kappa_s + kappa_as, kappa_s - kappa_as) * T(lambda f kappa_s / 2pi)|^2.
// The kappa_s pass is adaptive Gauss-Kronrod with the block edges seeded;
// the kappa_as pass integrates the smooth inner profile against the
// oscillation with panel-exact Legendre moments.  Throws ConvergenceError
// (with estimate and bound) if the budget runs out first.
double oracle_interference_g2(double rho_a, double rho_b, const ExperimentGeometry& g,
                              double sigma_plus, double sigma_minus,
                              const QuadratureSpec& quad);

// Same integral computed in the rotated coordinates
// (kappa_plus, kappa_minus) with the 1/2 Jacobian; used to guard against
// variable-change mistakes in the primary route.
double oracle_interference_g2_rotated(double rho_a, double rho_b,
                                      const ExperimentGeometry& g, double sigma_plus,
                                      double sigma_minus, const QuadratureSpec& quad);

// Imaging correlation: the detection-plane delta pins
// kappa_as = 2 pi rho_b / (lambda f); the remaining 1-D integral over
// kappa_s is evaluated by adaptive Gauss-Kronrod quadrature.
double oracle_imaging_g2(double rho_a, double rho_b, const ExperimentGeometry& g,
                         double sigma_plus, double sigma_minus,
                         const QuadratureSpec& quad);

// Whole-scan evaluators.  The interference version shares the inner
// decomposition across scan points (the smooth factor does not depend on
// rho_b); results are identical to the per-point calls.
OracleCurve oracle_interference_curve(double rho_a, std::span<const double> rho_bs,
                                      const ExperimentGeometry& g, double sigma_plus,
                                      double sigma_minus, const QuadratureSpec& quad);

OracleCurve oracle_imaging_curve(double rho_a, std::span<const double> rho_bs,
                                 const ExperimentGeometry& g, double sigma_plus,
                                 double sigma_minus, const QuadratureSpec& quad);

}  // namespace ghostfit
