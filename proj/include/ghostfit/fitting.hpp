#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "ghostfit/domain.hpp"
#include "ghostfit/models.hpp"

namespace ghostfit {

// One recorded coincidence scan.
struct ScanData {
    std::vector<double> positions;     // rho_b (mm), strictly increasing
    std::vector<double> coincidences;  // raw counts
    std::vector<double> singles_a;
    std::vector<double> singles_b;
    std::vector<double> duration;      // accumulation time per point (s)

    void validate() const;
};

struct NormalizedPoint {
    double position;
    double value;  // coincidences / (singles_a * singles_b)
    double sigma;  // Poisson error on the coincidences, same normalization
};

// Normalize to the singles product.  The Poisson error on the
// coincidences dominates; zero-count points get the 68% upper Poisson
// bound 1.148 as their count error so weights stay finite.
std::vector<NormalizedPoint> normalize_scan(const ScanData& scan);

// Box bounds; a parameter with lower == upper is frozen at that value.
struct ParamBounds {
    std::array<double, kNumParams> lower{1e-3, 1e-3, 1e-30, -1e6, 0.0};
    std::array<double, kNumParams> upper{1e4, 1e7, 1e30, 1e6, 1e30};

    static ParamBounds freeze(const CorrelationParams& p, bool sp, bool sm, bool amp,
                              bool center, bool background);
};

struct FitOptions {
    int max_iterations = 200;
    double step_tol = 1e-11;   // relative step size
    double chi2_tol = 1e-13;   // relative chi2 decrease
    double grad_tol = 1e-11;
};

struct FitResult {
    CorrelationParams params;
    // covariance over (sigma_plus, sigma_minus, amplitude, center,
    // background); zero rows/columns for frozen parameters
    std::array<double, kNumParams * kNumParams> covariance{};
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    int iterations = 0;                 // accepted steps
    bool degenerate = false;            // normal matrix numerically singular
    std::array<double, kNumParams> degenerate_direction{};
    std::vector<double> chi2_trace;     // chi2 after each accepted step

    double cov(int i, int j) const { return covariance[static_cast<std::size_t>(i) * kNumParams + j]; }
};

// Weighted nonlinear least squares with a Levenberg-Marquardt trust
// strategy: accepted steps strictly decrease chi2, box bounds are
// enforced by projection, the Jacobian uses forward differences with
// step 1e-6 (1 + |theta|).  The covariance is the (pseudo)inverse of the
// Gauss-Newton normal matrix at the optimum, scaled by chi2/dof when
// chi2/dof > 1.  Non-convergence is reported, never thrown.
FitResult fit_curve(std::span<const NormalizedPoint> data, ModelKind kind,
                    const ExperimentGeometry& geometry, const CorrelationParams& init,
                    const ParamBounds& bounds, const FitOptions& options = {});

// Joint uncertainties and the entanglement/steering verdict from a
// converged fit.  The product error includes the sigma_plus/sigma_minus
// covariance term.  Throws FitError for an unconverged fit.
std::pair<UncertaintyPair, Verdict> derive_verdict(const FitResult& fit);

// Crude starting point for the optimizer: center from the weight
// centroid, background from the edge median, amplitude from the peak,
// and the widths from a one-parameter envelope-width match assuming a
// strongly correlated pair (2 sigma_minus = 20 sigma_plus).  Heuristic
// only; override via the CLI width flags when it misleads.
CorrelationParams initial_guess(std::span<const NormalizedPoint> data, ModelKind kind,
                                const ExperimentGeometry& geometry);

}  // namespace ghostfit
