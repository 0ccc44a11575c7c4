#pragma once

#include <string>
#include <vector>

#include "ghostfit/domain.hpp"

namespace ghostfit {

enum class ModelKind {
    Interference,       // coincidence curve at the Fourier plane of the scan arm
    Imaging,            // coincidence curve at the image plane
    IdealInterference,  // perfect-correlation limit: |FT of the object|^2
    IdealImaging,       // perfect-correlation limit: |object(-rho_b)|^2
};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct CurveRequest {
    ExperimentGeometry geometry;
    CorrelationParams params;
    ModelKind kind = ModelKind::Interference;
    std::vector<double> scan;  // detector positions rho_b (mm), strictly increasing
};

struct CurvePoint {
    double rho_b;
    double g2;
};

// Closed-form coincidence curve for the interference layout, with the
// fixed detector on axis.  amplitude * (printed curve at rho_b - center)
// + background; always finite and >= 0.
double ghost_interference_g2(double rho_b, const ExperimentGeometry& g,
                             const CorrelationParams& p);

// Closed-form coincidence curve for the imaging layout.
double ghost_imaging_g2(double rho_b, const ExperimentGeometry& g,
                        const CorrelationParams& p);

// Perfect-correlation limits (no correlation parameters).
double ideal_interference_g2(double rho_b, const ExperimentGeometry& g);
double ideal_imaging_g2(double rho_b, const ExperimentGeometry& g);

// Evaluate the selected model over the request's scan grid.
std::vector<CurvePoint> evaluate_curve(const CurveRequest& request);

}  // namespace ghostfit
