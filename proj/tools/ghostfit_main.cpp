#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghostfit/errors.hpp"
#include "ghostfit/io.hpp"

using namespace ghostfit;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitFit = 3;
constexpr int kExitInconclusive = 4;

struct ScanRange {
    double min, max, step;
};

ScanRange parse_scan(const std::string& s) {
    ScanRange r{};
    char c1, c2;
    std::istringstream ss(s);
    if (!(ss >> r.min >> c1 >> r.max >> c2 >> r.step) || c1 != ':' || c2 != ':')
        throw ValidationError("--scan expects MIN:MAX:STEP");
    std::string rest;
    if (ss >> rest) throw ValidationError("--scan expects MIN:MAX:STEP");
    return r;
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-photon ghost interference/imaging simulation, fitting and "
                 "entanglement certification"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path, mode_str, scan_str;
    double sigma_plus = 0.0, sigma_minus = 0.0;
    double amplitude = 1.0, center = 0.0, background = 0.0;
    double sigma_plus_err = 0.0, sigma_minus_err = 0.0;
    double product = -1.0, product_err = 0.0;
    std::uint64_t seed = 0;
    bool seed_set = false, mode_set = false;
    long peak_counts = 400;

    auto add_model_params = [&](CLI::App* cmd, bool required) {
        auto* sp = cmd->add_option("--sigma-plus", sigma_plus,
                                   "momentum-sum envelope width (1/mm)");
        auto* sm = cmd->add_option("--sigma-minus", sigma_minus,
                                   "momentum-difference envelope width (1/mm)");
        if (required) {
            sp->required();
            sm->required();
        }
        cmd->add_option("--amplitude", amplitude, "overall scale");
        cmd->add_option("--center", center, "scan-axis offset (mm)");
        cmd->add_option("--background", background, "additive floor");
    };
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")->required();
        cmd->add_option("--out", out_path, "output path ('-' for stdout)");
        cmd->add_option_function<std::string>(
            "--scan", [&](const std::string& s) { scan_str = s; },
            "override the scan grid as MIN:MAX:STEP (mm)");
        cmd->add_option_function<std::string>(
            "--mode", [&](const std::string& s) { mode_str = s; mode_set = true; },
            "override the config mode");
    };

    auto* simulate = app.add_subcommand("simulate", "evaluate a model curve on the scan grid");
    add_common(simulate);
    add_model_params(simulate, true);

    auto* synth = app.add_subcommand("synth", "synthesize a Poisson-noised scan");
    add_common(synth);
    add_model_params(synth, true);
    synth->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "RNG seed");
    synth->add_option("--peak-counts", peak_counts, "expected coincidences at the peak");

    auto* fit = app.add_subcommand("fit", "fit a recorded scan and certify entanglement");
    add_common(fit);
    fit->add_option("--data", data_path, "scan CSV file")->required();
    add_model_params(fit, false);

    auto* criteria = app.add_subcommand(
        "criteria", "classify widths (or a product) against the separability and "
                    "steering bounds");
    criteria->add_option("--sigma-plus", sigma_plus, "fitted momentum-sum width (1/mm)");
    criteria->add_option("--sigma-minus", sigma_minus, "fitted momentum-difference width (1/mm)");
    criteria->add_option("--sigma-plus-err", sigma_plus_err, "1-sigma error");
    criteria->add_option("--sigma-minus-err", sigma_minus_err, "1-sigma error");
    criteria->add_option("--product", product, "uncertainty product (hbar^2), bypasses widths");
    criteria->add_option("--product-err", product_err, "1-sigma error on the product");
    criteria->add_option("--out", out_path, "output path ('-' for stdout)");

    auto* verify = app.add_subcommand("verify", "cross-check the closed form against the "
                                                "quadrature oracle");
    add_common(verify);
    add_model_params(verify, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        auto load = [&]() {
            RunConfig cfg = load_config(config_path);
            if (mode_set) cfg.mode = model_kind_from_string(mode_str);
            if (!scan_str.empty()) {
                const ScanRange r = parse_scan(scan_str);
                cfg.scan_min = r.min;
                cfg.scan_max = r.max;
                cfg.scan_step = r.step;
                cfg.validate();
            }
            if (seed_set) cfg.seed = seed;
            return cfg;
        };
        auto params = [&]() {
            CorrelationParams p;
            p.sigma_plus = sigma_plus;
            p.sigma_minus = sigma_minus;
            p.amplitude = amplitude;
            p.center = center;
            p.background = background;
            p.validate();
            return p;
        };

        if (*simulate) {
            const RunConfig cfg = load();
            CurveRequest req{cfg.geometry, params(), cfg.mode, cfg.scan_grid()};
            const auto curve = evaluate_curve(req);
            std::ostringstream ss;
            ss << "position_mm,model_value\n";
            char buf[80];
            for (const auto& p : curve) {
                std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", p.rho_b, p.g2);
                ss << buf;
            }
            write_text(ss.str(), out_path);
            return 0;
        }

        if (*synth) {
            const RunConfig cfg = load();
            const ScanData scan = synthesize_scan(cfg, params(), peak_counts);
            write_text(scan_to_csv(scan), out_path);
            return 0;
        }

        if (*fit) {
            const RunConfig cfg = load();
            const ScanData scan = load_scan(data_path);
            const auto points = normalize_scan(scan);
            const ModelKind kind = cfg.mode;
            if (kind != ModelKind::Interference && kind != ModelKind::Imaging)
                throw ValidationError("fit: mode must be interference or imaging");

            CorrelationParams init = initial_guess(points, kind, cfg.geometry);
            if (fit->count("--sigma-plus")) init.sigma_plus = sigma_plus;
            if (fit->count("--sigma-minus")) init.sigma_minus = sigma_minus;
            if (fit->count("--amplitude")) init.amplitude = amplitude;
            if (fit->count("--center")) init.center = center;
            if (fit->count("--background")) init.background = background;
            log_message(LogLevel::Info,
                        "fit: starting from sigma_plus=" + std::to_string(init.sigma_plus) +
                            ", sigma_minus=" + std::to_string(init.sigma_minus));

            const FitResult result =
                fit_curve(points, kind, cfg.geometry, init, ParamBounds{});
            if (!result.converged) {
                std::cerr << "fit did not converge after " << result.iterations
                          << " accepted steps (chi2 = " << result.chi2 << ")\n";
                return kExitFit;
            }
            const Report report =
                build_report(cfg, result, kind, fnv1a_hex(slurp(data_path)));
            write_text(report_to_json(report), out_path);
            if (!out_path.empty() && out_path != "-") {
                CurveRequest req{cfg.geometry, result.params, kind,
                                 std::vector<double>(scan.positions)};
                emit_plot_data(evaluate_curve(req), points, out_path + ".plot.csv");
            }
            return 0;
        }

        if (*criteria) {
            UncertaintyPair pair;
            Verdict verdict;
            if (product >= 0.0) {
                // a bare product: report it against the two thresholds
                verdict.product = product;
                verdict.product_err = product_err;
                verdict.entangled = product < 1.0;
                verdict.steerable = product < 0.25;
            } else {
                if (!(sigma_plus > 0.0) || !(sigma_minus > 0.0))
                    throw ValidationError(
                        "criteria: provide --sigma-plus and --sigma-minus, or --product");
                pair = joint_uncertainties(sigma_plus, sigma_minus);
                pair.dp_plus_err = sigma_plus_err / std::numbers::sqrt2;
                pair.dx_minus_err =
                    sigma_minus_err / (std::numbers::sqrt2 * sigma_minus * sigma_minus);
                verdict = classify(pair);
            }
            nlohmann::json j;
            if (product < 0.0) {
                j["dp_plus_hbar_per_mm"] = pair.dp_plus;
                j["dp_plus_err_hbar_per_mm"] = pair.dp_plus_err;
                j["dx_minus_mm"] = pair.dx_minus;
                j["dx_minus_err_mm"] = pair.dx_minus_err;
            }
            j["product_hbar2"] = verdict.product;
            j["product_err_hbar2"] = verdict.product_err;
            j["entangled"] = verdict.entangled;
            j["steerable"] = verdict.steerable;
            write_text(j.dump(2) + "\n", out_path);
            return 0;
        }

        if (*verify) {
            const RunConfig cfg = load();
            const VerifyReport rep = run_verify(cfg, params());
            nlohmann::json j;
            j["mode"] = rep.mode;
            j["sup_discrepancy"] = rep.sup_discrepancy;
            j["tolerance"] = rep.tolerance;
            j["pass"] = rep.pass;
            j["conclusive"] = rep.conclusive;
            j["oracle_evals"] = rep.oracle_evals;
            write_text(j.dump(2) + "\n", out_path);
            if (!rep.conclusive) return kExitInconclusive;
            return rep.pass ? 0 : 1;
        }
    } catch (const ConvergenceError& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
