#include "ghostfit/models.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "ghostfit/errors.hpp"
#include "ghostfit/special.hpp"

namespace ghostfit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnderflowLog = -745.0;

void check_finite(double v, const char* subterm) {
    if (!std::isfinite(v))
        throw EvaluationError(std::string("curve evaluation produced a non-finite ") + subterm);
}

}  // namespace

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Interference: return "interference";
        case ModelKind::Imaging: return "imaging";
        case ModelKind::IdealInterference: return "ideal-interference";
        case ModelKind::IdealImaging: return "ideal-imaging";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "interference") return ModelKind::Interference;
    if (name == "imaging") return ModelKind::Imaging;
    if (name == "ideal-interference") return ModelKind::IdealInterference;
    if (name == "ideal-imaging") return ModelKind::IdealImaging;
    throw ValidationError("unknown mode '" + name +
                          "' (expected interference, imaging, ideal-interference, ideal-imaging)");
}

double ghost_interference_g2(double rho_b, const ExperimentGeometry& g,
                             const CorrelationParams& p) {
    g.validate();
    p.validate();
    const double x = rho_b - p.center;
    const double sp2 = p.sigma_plus * p.sigma_plus;
    const double sm2 = p.sigma_minus * p.sigma_minus;
    const double S = sp2 + 4.0 * sm2;
    const double w02 = g.w0 * g.w0;
    const double f2 = g.f * g.f;
    const double lam2 = g.lambda * g.lambda;

    const double K = 8.0 * kPi * kPi * w02 + f2 * S * lam2;
    const double pre = p.sigma_plus * p.sigma_minus * g.w0 / std::sqrt(K);
    const double env = f2 * (kPi * kPi * S * w02 + 2.0 * f2 * sp2 * sm2 * lam2) /
                       (g.f_b * g.f_b * K);
    const double den = 2.0 * g.f * g.f_b * g.w0 * g.lambda * std::sqrt(S * K);

    // complementary error function arguments c -+ i d x; the pair is a
    // conjugate pair, so the sum is 2 Re erfc(c + i|d x|)
    const double c = g.f_b * g.wb * K / den;
    const double d = 2.0 * f2 * kPi * (4.0 * sm2 - sp2) * w02 * g.lambda / den;
    const double y = std::fabs(d * x);

    // Combine the Gaussian prefactor with exp(-(c+iy)^2) from
    // erfc(c+iy) = exp(y^2-c^2) exp(-2icy) w(-y+ic) in log magnitude;
    // d^2 - env <= 0 for valid parameters, so the exponent never grows.
    const double log_mag = (d * d - env) * x * x - c * c;
    check_finite(log_mag, "exponent");
    if (log_mag < kUnderflowLog) return p.background;

    const std::complex<double> w = faddeeva({-y, c});
    const double ph = -2.0 * c * y;
    const double pc = std::fma(-2.0 * c, y, -ph);
    const double re = (std::cos(ph) - std::sin(ph) * pc) * w.real() -
                      (std::sin(ph) + std::cos(ph) * pc) * w.imag();
    check_finite(re, "erfc sum");

    const double amp = pre * std::exp(log_mag) * 2.0 * re;
    check_finite(amp, "curve amplitude");
    const double g2 = p.amplitude * amp * amp + p.background;
    check_finite(g2, "g2 value");
    return g2;
}

double ghost_imaging_g2(double rho_b, const ExperimentGeometry& g,
                        const CorrelationParams& p) {
    g.validate();
    p.validate();
    const double x = rho_b - p.center;
    const double sp2 = p.sigma_plus * p.sigma_plus;
    const double sm2 = p.sigma_minus * p.sigma_minus;
    const double S = sp2 + 4.0 * sm2;
    const double w02 = g.w0 * g.w0;
    const double f2 = g.f * g.f;
    const double lam2 = g.lambda * g.lambda;

    const double D = 2.0 * kPi * kPi * S * w02 + 4.0 * f2 * sp2 * sm2 * lam2;
    const double pre = p.sigma_plus * p.sigma_minus * g.w0 / std::sqrt(D);
    const double env = 2.0 * kPi * kPi * (8.0 * kPi * kPi * w02 + f2 * S * lam2) /
                       (f2 * lam2 * D);
    const double den = 4.0 * g.f * g.f_a * p.sigma_plus * p.sigma_minus * g.w0 *
                       g.lambda * std::sqrt(D);
    const double common = 4.0 * f2 * g.f_a * sp2 * sm2 * g.wb * lam2;
    const double b1 = (2.0 * g.f_a * kPi * kPi * w02 *
                           (4.0 * sm2 * (g.wb - 2.0 * x) + sp2 * (g.wb + 2.0 * x)) +
                       common) / den;
    const double b2 = (2.0 * g.f_a * kPi * kPi * w02 *
                           (4.0 * sm2 * (g.wb + 2.0 * x) + sp2 * (g.wb - 2.0 * x)) +
                       common) / den;
    check_finite(b1, "erf argument");
    check_finite(b2, "erf argument");

    // 2 - erf(b1) - erf(b2) evaluated as erfc(b1) + erfc(b2): the direct
    // form loses all significance at the bottom of the block dip
    const double bracket = erfc_real(b1) + erfc_real(b2);

    const double expo = -env * x * x;
    check_finite(expo, "exponent");
    if (expo < kUnderflowLog) return p.background;
    const double amp = pre * std::exp(expo) * bracket;
    check_finite(amp, "curve amplitude");
    const double g2 = p.amplitude * amp * amp + p.background;
    check_finite(g2, "g2 value");
    return g2;
}

double ideal_interference_g2(double rho_b, const ExperimentGeometry& g) {
    g.validate();
    // spatial frequency at the object plane selected by the scan position
    const double q = 2.0 * kPi * rho_b / (g.lambda * g.f_b);
    const double t = object_transmittance_ft(q, g.w0, g.wb).real();
    return t * t;
}

double ideal_imaging_g2(double rho_b, const ExperimentGeometry& g) {
    g.validate();
    const double t = object_transmittance(-rho_b, g.w0, g.wb);
    return t * t;
}

std::vector<CurvePoint> evaluate_curve(const CurveRequest& request) {
    request.geometry.validate();
    request.params.validate();
    if (request.scan.empty()) throw ValidationError("curve request: empty scan");
    for (std::size_t i = 1; i < request.scan.size(); ++i)
        if (!(request.scan[i] > request.scan[i - 1]))
            throw ValidationError("curve request: scan positions must be strictly increasing");

    std::vector<CurvePoint> out;
    out.reserve(request.scan.size());
    for (std::size_t i = 0; i < request.scan.size(); ++i) {
        const double rb = request.scan[i];
        double v = 0.0;
        try {
            switch (request.kind) {
                case ModelKind::Interference:
                    v = ghost_interference_g2(rb, request.geometry, request.params);
                    break;
                case ModelKind::Imaging:
                    v = ghost_imaging_g2(rb, request.geometry, request.params);
                    break;
                case ModelKind::IdealInterference:
                    v = request.params.amplitude *
                            ideal_interference_g2(rb - request.params.center, request.geometry) +
                        request.params.background;
                    break;
                case ModelKind::IdealImaging:
                    v = request.params.amplitude *
                            ideal_imaging_g2(rb - request.params.center, request.geometry) +
                        request.params.background;
                    break;
            }
        } catch (const EvaluationError& e) {
            throw EvaluationError(std::string(e.what()) + " at scan index " +
                                  std::to_string(i));
        }
        out.push_back({rb, v});
    }
    return out;
}

}  // namespace ghostfit
