#include "ghostfit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ghostfit/errors.hpp"

namespace ghostfit {

using nlohmann::json;

const char* const kToolVersion = "ghostfit 0.1.0";

LogLevel log_level() {
    const char* env = std::getenv("EPR_LOG");
    if (!env) return LogLevel::Warn;
    const std::string v(env);
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "error") return LogLevel::Error;
    if (v == "warn") return LogLevel::Warn;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

void log_message(LogLevel level, const std::string& msg) {
    static const char* names[] = {"quiet", "error", "warn", "info", "debug"};
    if (static_cast<int>(level) <= static_cast<int>(log_level()) &&
        level != LogLevel::Quiet)
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

void RunConfig::validate() const {
    geometry.validate();
    quad.validate();
    if (!(scan_min < scan_max))
        throw ValidationError("scan: scan_min must be < scan_max");
    if (!(scan_step > 0.0))
        throw ValidationError("scan: scan_step must be strictly positive");
    if ((scan_max - scan_min) / scan_step > 1e5)
        throw ValidationError("scan: more than 1e5 points requested");
}

std::vector<double> RunConfig::scan_grid() const {
    validate();
    const long n = std::lround((scan_max - scan_min) / scan_step);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) {
        const double x = scan_min + static_cast<double>(i) * scan_step;
        if (x > scan_max + 0.5 * scan_step) break;
        grid.push_back(x);
    }
    return grid;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

double take_number(const json& j, const std::string& field, std::optional<double> fallback,
                   std::vector<std::string>& notes) {
    if (j.contains(field)) {
        if (!j.at(field).is_number())
            throw ValidationError("config: field '" + field + "' must be a number");
        return j.at(field).get<double>();
    }
    if (!fallback)
        throw ValidationError("config: missing required field '" + field + "'");
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", *fallback);
    notes.push_back(field + " defaulted to " + buf);
    return *fallback;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("config: malformed JSON in '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");

    RunConfig cfg;
    std::vector<std::string>& notes = cfg.notes;

    const json geo = j.value("geometry", json::object());
    if (!geo.is_object()) throw ValidationError("config: 'geometry' must be an object");
    cfg.geometry.f = take_number(geo, "f_mm", 400.0, notes);
    cfg.geometry.f_a = take_number(geo, "f_a_mm", 13.5, notes);
    cfg.geometry.f_b = take_number(geo, "f_b_mm", 25.4, notes);
    cfg.geometry.lambda = take_number(geo, "lambda_mm", 7.95e-4, notes);
    cfg.geometry.w0 = take_number(geo, "w0_mm", 1.6, notes);
    cfg.geometry.wb = take_number(geo, "wb_mm", 1.23, notes);
    if (!geo.contains("w0_mm"))
        notes.push_back("w0_mm is a configured placeholder, not derived from the collection optics");
    if (!geo.contains("lambda_mm"))
        notes.push_back("lambda_mm defaulted to the rubidium D1 wavelength");

    if (j.contains("mode")) {
        if (!j.at("mode").is_string())
            throw ValidationError("config: field 'mode' must be a string");
        cfg.mode = model_kind_from_string(j.at("mode").get<std::string>());
    } else {
        notes.push_back("mode defaulted to interference");
    }

    const json scan = j.value("scan", json::object());
    if (!scan.is_object()) throw ValidationError("config: 'scan' must be an object");
    cfg.scan_min = take_number(scan, "min_mm", -6.0, notes);
    cfg.scan_max = take_number(scan, "max_mm", 6.0, notes);
    cfg.scan_step = take_number(scan, "step_mm", 0.24, notes);

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            throw ValidationError("config: field 'seed' must be a non-negative integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    } else {
        notes.push_back("seed defaulted to 1");
    }

    const json quad = j.value("quadrature", json::object());
    if (!quad.is_object()) throw ValidationError("config: 'quadrature' must be an object");
    cfg.quad.truncation = take_number(quad, "truncation", 8.0, notes);
    cfg.quad.rel_tol = take_number(quad, "rel_tol", 1e-6, notes);
    cfg.quad.max_evals =
        static_cast<long>(take_number(quad, "max_evals", 8e6, notes));

    cfg.validate();
    for (const auto& n : notes) log_message(LogLevel::Info, "config: " + n);
    return cfg;
}

std::string config_canonical(const RunConfig& config) {
    json j;
    j["geometry"] = {{"f_mm", config.geometry.f},      {"f_a_mm", config.geometry.f_a},
                     {"f_b_mm", config.geometry.f_b},  {"lambda_mm", config.geometry.lambda},
                     {"w0_mm", config.geometry.w0},    {"wb_mm", config.geometry.wb}};
    j["mode"] = to_string(config.mode);
    j["scan"] = {{"min_mm", config.scan_min},
                 {"max_mm", config.scan_max},
                 {"step_mm", config.scan_step}};
    j["seed"] = config.seed;
    j["quadrature"] = {{"truncation", config.quad.truncation},
                       {"rel_tol", config.quad.rel_tol},
                       {"max_evals", config.quad.max_evals}};
    return j.dump();
}

namespace {

constexpr const char* kScanHeader = "position_mm,coincidences,singles_a,singles_b,duration_s";

}  // namespace

ScanData load_scan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("scan: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("scan: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kScanHeader)
        throw DataError("scan: expected header '" + std::string(kScanHeader) + "'");

    ScanData scan;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        double v[5];
        char sep;
        for (int i = 0; i < 5; ++i) {
            if (!(ss >> v[i]))
                throw DataError("scan: malformed row at line " + std::to_string(line_no));
            if (i < 4 && !(ss >> sep && sep == ','))
                throw DataError("scan: malformed row at line " + std::to_string(line_no));
        }
        std::string rest;
        if (ss >> rest)
            throw DataError("scan: trailing fields at line " + std::to_string(line_no));
        if (v[1] < 0.0 || v[2] < 0.0 || v[3] < 0.0)
            throw DataError("scan: negative count at line " + std::to_string(line_no));
        if (!scan.positions.empty() && !(v[0] > scan.positions.back()))
            throw DataError("scan: positions not strictly increasing at line " +
                            std::to_string(line_no));
        scan.positions.push_back(v[0]);
        scan.coincidences.push_back(v[1]);
        scan.singles_a.push_back(v[2]);
        scan.singles_b.push_back(v[3]);
        scan.duration.push_back(v[4]);
    }
    scan.validate();
    return scan;
}

std::string scan_to_csv(const ScanData& scan) {
    std::ostringstream out;
    out << kScanHeader << "\n";
    char buf[160];
    for (std::size_t i = 0; i < scan.positions.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      scan.positions[i], scan.coincidences[i], scan.singles_a[i],
                      scan.singles_b[i], scan.duration[i]);
        out << buf;
    }
    return out.str();
}

void write_scan(const ScanData& scan, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << scan_to_csv(scan);
    if (!out) throw Error("write failed for '" + path + "'");
}

PoissonSampler::PoissonSampler(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

double PoissonSampler::next_uniform() {
    // splitmix64; plenty for synthetic-count generation and fully portable
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

long PoissonSampler::sample(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw DomainError("poisson: mean must be finite and non-negative");
    if (mean == 0.0) return 0;
    // Poisson additivity: split large means into chunks where the
    // multiplicative (Knuth) scheme stays in exponent range
    long total = 0;
    double remaining = mean;
    while (remaining > 30.0) {
        total += sample(30.0);
        remaining -= 30.0;
    }
    const double limit = std::exp(-remaining);
    double prod = 1.0;
    long k = -1;
    do {
        prod *= next_uniform();
        ++k;
    } while (prod > limit);
    return total + k;
}

ScanData synthesize_scan(const RunConfig& config, const CorrelationParams& params,
                         long peak_counts) {
    config.validate();
    params.validate();
    if (peak_counts < 0) throw ValidationError("synthesize_scan: peak_counts must be >= 0");

    CurveRequest req{config.geometry, params, config.mode, config.scan_grid()};
    const std::vector<CurvePoint> curve = evaluate_curve(req);
    double peak = 0.0;
    for (const auto& p : curve) peak = std::max(peak, p.g2);
    const double scale = peak > 0.0 ? static_cast<double>(peak_counts) / peak : 0.0;

    PoissonSampler rng(config.seed);
    ScanData scan;
    for (const auto& p : curve) {
        scan.positions.push_back(p.rho_b);
        scan.coincidences.push_back(static_cast<double>(rng.sample(scale * p.g2)));
        scan.singles_a.push_back(1e4);
        scan.singles_b.push_back(1e4);
        scan.duration.push_back(60.0);
    }
    scan.validate();
    return scan;
}

VerifyReport run_verify(const RunConfig& config, const CorrelationParams& params) {
    config.validate();
    params.validate();
    if (config.mode != ModelKind::Interference && config.mode != ModelKind::Imaging)
        throw ValidationError("verify: mode must be interference or imaging");

    const std::vector<double> grid = config.scan_grid();
    CurveRequest req{config.geometry, params, config.mode, grid};
    const std::vector<CurvePoint> analytic = evaluate_curve(req);

    OracleCurve oracle = config.mode == ModelKind::Interference
                             ? oracle_interference_curve(0.0, grid, config.geometry,
                                                         params.sigma_plus,
                                                         params.sigma_minus, config.quad)
                             : oracle_imaging_curve(0.0, grid, config.geometry,
                                                    params.sigma_plus, params.sigma_minus,
                                                    config.quad);

    VerifyReport rep;
    rep.mode = to_string(config.mode);
    rep.oracle_evals = oracle.evals;
    rep.conclusive = oracle.converged;

    double amax = 0.0, omax = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        amax = std::max(amax, analytic[i].g2);
        omax = std::max(omax, oracle.g2[i]);
    }
    if (!(amax > 0.0) || !(omax > 0.0)) {
        rep.conclusive = false;
        rep.pass = false;
        return rep;
    }
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        sup = std::max(sup, std::fabs(analytic[i].g2 / amax - oracle.g2[i] / omax));
    rep.sup_discrepancy = sup;
    rep.pass = rep.conclusive && sup <= rep.tolerance;
    return rep;
}

namespace {

json verdict_json(const Report& r) {
    json j;
    j["sigma_plus_per_mm"] = r.params.sigma_plus;
    j["sigma_plus_err_per_mm"] = r.sigma_plus_err;
    j["sigma_minus_per_mm"] = r.params.sigma_minus;
    j["sigma_minus_err_per_mm"] = r.sigma_minus_err;
    j["amplitude"] = r.params.amplitude;
    j["center_mm"] = r.params.center;
    j["background"] = r.params.background;
    j["dp_plus_hbar_per_mm"] = r.pair.dp_plus;
    j["dp_plus_err_hbar_per_mm"] = r.pair.dp_plus_err;
    j["dx_minus_mm"] = r.pair.dx_minus;
    j["dx_minus_err_mm"] = r.pair.dx_minus_err;
    j["product_hbar2"] = r.verdict.product;
    j["product_err_hbar2"] = r.verdict.product_err;
    j["entangled"] = r.verdict.entangled;
    j["steerable"] = r.verdict.steerable;
    j["chi2_per_dof"] = r.chi2_per_dof;
    json cov = json::array();
    for (int a = 0; a < kNumParams; ++a) {
        json row = json::array();
        for (int b = 0; b < kNumParams; ++b)
            row.push_back(r.covariance[static_cast<std::size_t>(a) * kNumParams + b]);
        cov.push_back(row);
    }
    j["covariance"] = cov;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["mode"] = r.mode;
    j["provenance"] = {{"config_hash", r.provenance.config_hash},
                       {"data_hash", r.provenance.data_hash},
                       {"tool_version", r.provenance.tool_version}};
    j["notes"] = r.notes;
    return j;
}

}  // namespace

std::string report_to_json(const Report& report) {
    // consistency gate: the stored verdict must re-derive from the pair
    const Verdict check = classify(report.pair);
    if (check.entangled != report.verdict.entangled ||
        check.steerable != report.verdict.steerable)
        throw Error("report: verdict inconsistent with its uncertainty pair");
    return verdict_json(report).dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    json j = json::parse(text);
    Report r;
    r.params.sigma_plus = j.at("sigma_plus_per_mm").get<double>();
    r.sigma_plus_err = j.at("sigma_plus_err_per_mm").get<double>();
    r.params.sigma_minus = j.at("sigma_minus_per_mm").get<double>();
    r.sigma_minus_err = j.at("sigma_minus_err_per_mm").get<double>();
    r.params.amplitude = j.at("amplitude").get<double>();
    r.params.center = j.at("center_mm").get<double>();
    r.params.background = j.at("background").get<double>();
    r.pair.dp_plus = j.at("dp_plus_hbar_per_mm").get<double>();
    r.pair.dp_plus_err = j.at("dp_plus_err_hbar_per_mm").get<double>();
    r.pair.dx_minus = j.at("dx_minus_mm").get<double>();
    r.pair.dx_minus_err = j.at("dx_minus_err_mm").get<double>();
    r.verdict.product = j.at("product_hbar2").get<double>();
    r.verdict.product_err = j.at("product_err_hbar2").get<double>();
    r.verdict.entangled = j.at("entangled").get<bool>();
    r.verdict.steerable = j.at("steerable").get<bool>();
    r.chi2_per_dof = j.at("chi2_per_dof").get<double>();
    const auto cov = j.at("covariance");
    for (int a = 0; a < kNumParams; ++a)
        for (int b = 0; b < kNumParams; ++b)
            r.covariance[static_cast<std::size_t>(a) * kNumParams + b] =
                cov.at(a).at(b).get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.mode = j.at("mode").get<std::string>();
    r.provenance.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    r.provenance.data_hash = j.at("provenance").at("data_hash").get<std::string>();
    r.provenance.tool_version = j.at("provenance").at("tool_version").get<std::string>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
}

void write_report(const Report& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << report_to_json(report);
    if (!out) throw Error("write failed for '" + path + "'");
}

Report read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

void emit_plot_data(const std::vector<CurvePoint>& curve,
                    const std::vector<NormalizedPoint>& data, const std::string& path) {
    if (curve.size() != data.size())
        throw Error("plot data: curve and data lengths differ");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "position_mm,data_value,data_sigma,model_value\n";
    char buf[160];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n", data[i].position,
                      data[i].value, data[i].sigma, curve[i].g2);
        out << buf;
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

void emit_curve_data(const std::vector<CurvePoint>& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "position_mm,model_value\n";
    char buf[80];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", p.rho_b, p.g2);
        out << buf;
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

Report build_report(const RunConfig& config, const FitResult& fit, ModelKind mode,
                    const std::string& data_hash) {
    Report r;
    r.params = fit.params;
    r.sigma_plus_err = std::sqrt(std::max(fit.cov(0, 0), 0.0));
    r.sigma_minus_err = std::sqrt(std::max(fit.cov(1, 1), 0.0));
    r.covariance = fit.covariance;
    auto [pair, verdict] = derive_verdict(fit);
    r.pair = pair;
    r.verdict = verdict;
    r.chi2_per_dof = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
    r.converged = fit.converged;
    r.iterations = fit.iterations;
    r.mode = to_string(mode);
    r.provenance.config_hash = fnv1a_hex(config_canonical(config));
    r.provenance.data_hash = data_hash;
    r.provenance.tool_version = kToolVersion;
    r.notes = config.notes;
    if (fit.degenerate)
        r.notes.push_back("fit covariance is rank-deficient; errors along the flat "
                          "direction are not meaningful");
    return r;
}

}  // namespace ghostfit
