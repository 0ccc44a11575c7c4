#include "ghostfit/domain.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ghostfit/errors.hpp"
#include "ghostfit/special.hpp"

namespace ghostfit {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw ValidationError(std::string(name) + " must be strictly positive");
}

}  // namespace

void ExperimentGeometry::validate() const {
    require_positive(f, "geometry.f_mm");
    require_positive(f_a, "geometry.f_a_mm");
    require_positive(f_b, "geometry.f_b_mm");
    require_positive(lambda, "geometry.lambda_mm");
    require_positive(w0, "geometry.w0_mm");
    if (!(wb >= 0.0) || !std::isfinite(wb))
        throw ValidationError("geometry.wb_mm must be non-negative");
    const double fmin = std::min(std::min(f, f_a), f_b);
    if (!(lambda / fmin < 1e-3))
        throw ValidationError("geometry: paraxial sanity lambda/f < 1e-3 violated");
}

void CorrelationParams::validate() const {
    require_positive(sigma_plus, "params.sigma_plus");
    require_positive(sigma_minus, "params.sigma_minus");
    require_positive(amplitude, "params.amplitude");
    if (!(background >= 0.0) || !std::isfinite(background))
        throw ValidationError("params.background must be non-negative");
    if (!std::isfinite(center))
        throw ValidationError("params.center must be finite");
}

double envelope_plus(double kappa_plus, double sigma_plus) {
    if (!(sigma_plus > 0.0))
        throw DomainError("envelope_plus: sigma_plus must be positive");
    const double norm = std::pow(std::numbers::pi * sigma_plus * sigma_plus, -0.25);
    const double t = kappa_plus / sigma_plus;
    return norm * std::exp(-0.5 * t * t);
}

double envelope_minus_half(double kappa_minus_half, double sigma_minus) {
    if (!(sigma_minus > 0.0))
        throw DomainError("envelope_minus: sigma_minus must be positive");
    const double norm = std::pow(std::numbers::pi * sigma_minus * sigma_minus, -0.25);
    const double t = kappa_minus_half / sigma_minus;
    return norm * std::exp(-0.5 * t * t);
}

double transverse_correlation(double kappa_plus, double kappa_minus,
                              double sigma_plus, double sigma_minus) {
    return envelope_plus(kappa_plus, sigma_plus) *
           envelope_minus_half(0.5 * std::fabs(kappa_minus), sigma_minus);
}

double object_transmittance(double rho_o, double w0, double wb) {
    if (!(w0 > 0.0)) throw DomainError("object_transmittance: w0 must be positive");
    if (!(wb >= 0.0)) throw DomainError("object_transmittance: wb must be non-negative");
    if (wb > 0.0 && std::fabs(rho_o) <= 0.5 * wb) return 0.0;
    const double t = rho_o / w0;
    return std::exp(-t * t);
}

std::complex<double> object_transmittance_ft(double q, double w0, double wb) {
    if (!(w0 > 0.0)) throw DomainError("object_transmittance_ft: w0 must be positive");
    if (!(wb >= 0.0)) throw DomainError("object_transmittance_ft: wb must be non-negative");

    // T~(q) = w0 sqrt(pi) exp(-q^2 w0^2/4) [1 - Re erf(c + i b)]
    // with c = wb/(2 w0), b = q w0/2.  Folding the Gaussian into the
    // erfc product gives the overflow-free form
    //   T~(q) = w0 sqrt(pi) exp(-c^2) Re[exp(-2 i c b) w(-b + i c)],
    // since exp(-b^2) exp(-(c+ib)^2) = exp(-c^2) exp(-2icb).
    const double c = 0.5 * wb / w0;
    const double b = 0.5 * q * w0;
    const std::complex<double> w = faddeeva({-b, c});
    const double ph = -2.0 * c * b;
    const double pc = std::fma(-2.0 * c, b, -ph);
    const double re = (std::cos(ph) - std::sin(ph) * pc) * w.real() -
                      (std::sin(ph) + std::cos(ph) * pc) * w.imag();
    const double val = w0 * std::sqrt(std::numbers::pi) * std::exp(-c * c) * re;
    return {val, 0.0};
}

UncertaintyPair joint_uncertainties(double sigma_plus, double sigma_minus) {
    if (!(sigma_plus > 0.0) || !(sigma_minus > 0.0))
        throw DomainError("joint_uncertainties: sigma_plus and sigma_minus must be positive");
    UncertaintyPair p;
    p.dp_plus = sigma_plus / std::numbers::sqrt2;
    p.dx_minus = 1.0 / (std::numbers::sqrt2 * sigma_minus);
    return p;
}

Verdict classify(const UncertaintyPair& pair) {
    if (!(pair.dp_plus > 0.0) || !(pair.dx_minus > 0.0))
        throw DomainError("classify: uncertainties must be positive");
    Verdict v;
    const double dxdp = pair.dx_minus * pair.dp_plus;
    v.product = dxdp * dxdp;
    const double ddp = 2.0 * pair.dx_minus * pair.dx_minus * pair.dp_plus * pair.dp_plus_err;
    const double ddx = 2.0 * pair.dp_plus * pair.dp_plus * pair.dx_minus * pair.dx_minus_err;
    v.product_err = std::hypot(ddp, ddx);
    v.entangled = v.product < 1.0;
    v.steerable = v.product < 0.25;
    return v;
}

}  // namespace ghostfit
