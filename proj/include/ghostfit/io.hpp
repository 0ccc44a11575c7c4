#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ghostfit/domain.hpp"
#include "ghostfit/fitting.hpp"
#include "ghostfit/models.hpp"
#include "ghostfit/oracle.hpp"

namespace ghostfit {

// Log verbosity is controlled by the EPR_LOG environment variable
// (quiet, error, warn, info, debug); it never affects results.
enum class LogLevel { Quiet = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };
LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

struct RunConfig {
    ExperimentGeometry geometry;
    ModelKind mode = ModelKind::Interference;
    double scan_min = -6.0;
    double scan_max = 6.0;
    double scan_step = 0.24;
    std::uint64_t seed = 1;
    QuadratureSpec quad;
    std::vector<std::string> notes;  // defaults applied during loading

    void validate() const;
    std::vector<double> scan_grid() const;
};

struct Provenance {
    std::string config_hash;
    std::string data_hash;
    std::string tool_version;
};

struct Report {
    CorrelationParams params;
    double sigma_plus_err = 0.0;
    double sigma_minus_err = 0.0;
    // full covariance over (sigma_plus, sigma_minus, amplitude, center,
    // background): flat directions stay visible instead of hidden
    std::array<double, kNumParams * kNumParams> covariance{};
    UncertaintyPair pair;
    Verdict verdict;
    double chi2_per_dof = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string mode;
    Provenance provenance;
    std::vector<std::string> notes;
};

struct VerifyReport {
    std::string mode;
    double sup_discrepancy = 0.0;  // after peak normalization
    double tolerance = 1e-4;
    bool pass = false;
    bool conclusive = true;  // false when the oracle did not converge
    long oracle_evals = 0;
};

// FNV-1a 64-bit over a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Parse and validate a JSON config file; omitted optional fields take
// defaults and are reported in RunConfig::notes (and logged at info).
RunConfig load_config(const std::string& path);

// Canonical serialized form of a config (used for the provenance hash).
std::string config_canonical(const RunConfig& config);

// Scan CSV with header position_mm,coincidences,singles_a,singles_b,duration_s.
ScanData load_scan(const std::string& path);
void write_scan(const ScanData& scan, const std::string& path);
std::string scan_to_csv(const ScanData& scan);

// Deterministic Poisson sampler (splitting into chunks keeps the inverse
// CDF search exact for large means); identical output for identical seeds.
class PoissonSampler {
  public:
    explicit PoissonSampler(std::uint64_t seed);
    long sample(double mean);

  private:
    std::uint64_t state_;
    double next_uniform();  // in (0, 1)
};

// Synthesize a scan: model curve scaled so its peak expectation equals
// peak_counts, Poisson counts per point, constant singles of 1e4 and
// 60 s dwell (the synthetic convention).
ScanData synthesize_scan(const RunConfig& config, const CorrelationParams& params,
                         long peak_counts);

// Compare the closed-form curve against the quadrature oracle on the
// config's scan grid: both normalized to their own maximum, pass when the
// sup-norm discrepancy is <= 1e-4.  An unconverged oracle yields an
// inconclusive report, never a pass.
VerifyReport run_verify(const RunConfig& config, const CorrelationParams& params);

// Report serialization (JSON, sorted keys, deterministic).
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);
void write_report(const Report& report, const std::string& path);
Report read_report(const std::string& path);

// Plot data: position_mm, data_value, data_sigma, model_value columns.
void emit_plot_data(const std::vector<CurvePoint>& curve,
                    const std::vector<NormalizedPoint>& data, const std::string& path);

// Model curve only: position_mm, model_value columns.
void emit_curve_data(const std::vector<CurvePoint>& curve, const std::string& path);

Report build_report(const RunConfig& config, const FitResult& fit, ModelKind mode,
                    const std::string& data_hash);

extern const char* const kToolVersion;

}  // namespace ghostfit
