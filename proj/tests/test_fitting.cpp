#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ghostfit/errors.hpp"
#include "ghostfit/fitting.hpp"
#include "ghostfit/io.hpp"
#include "support.hpp"

using namespace ghostfit;
using testsupport::reference_geometry;
using testsupport::rel_err;

namespace {

constexpr double kSp = testsupport::kSigmaPlusRef;
constexpr double kSm = testsupport::kSigmaMinusRef;

std::vector<double> mode_grid(ModelKind kind) {
    const double half = kind == ModelKind::Interference ? 0.05 : 3.0;
    std::vector<double> g;
    for (int i = 0; i < 61; ++i) g.push_back(-half + 2.0 * half * i / 60.0);
    return g;
}

CorrelationParams truth_for(ModelKind kind, const ExperimentGeometry& g) {
    CorrelationParams t;
    t.sigma_plus = kSp;
    t.sigma_minus = kSm;
    t.amplitude = 1.0;
    t.center = kind == ModelKind::Interference ? 0.004 : 0.3;
    t.background = 0.0;
    double peak = 0.0;
    for (double x : mode_grid(kind)) {
        const double v = kind == ModelKind::Interference ? ghost_interference_g2(x, g, t)
                                                         : ghost_imaging_g2(x, g, t);
        peak = std::max(peak, v);
    }
    t.background = 0.02 * peak;
    return t;
}

std::vector<NormalizedPoint> noiseless_data(ModelKind kind, const ExperimentGeometry& g,
                                            const CorrelationParams& t) {
    std::vector<NormalizedPoint> data;
    double peak = 0.0;
    for (double x : mode_grid(kind)) {
        const double v = kind == ModelKind::Interference ? ghost_interference_g2(x, g, t)
                                                         : ghost_imaging_g2(x, g, t);
        peak = std::max(peak, v);
        data.push_back({x, v, 0.0});
    }
    for (auto& d : data) d.sigma = 1e-3 * peak;
    return data;
}

CorrelationParams perturbed(const CorrelationParams& t) {
    CorrelationParams p = t;
    p.sigma_plus *= 1.2;
    p.sigma_minus *= 0.8;
    p.amplitude *= 1.2;
    p.center *= 0.8;
    p.background *= 1.2;
    return p;
}

// the synthesized scan lives in normalized-count units: rescale the
// model-unit truth into the units the fitter actually sees
CorrelationParams data_units_truth(const CorrelationParams& t, ModelKind kind,
                                   const ExperimentGeometry& g, long peak_counts) {
    double peak = 0.0;
    for (double x : mode_grid(kind)) {
        const double v = kind == ModelKind::Interference ? ghost_interference_g2(x, g, t)
                                                         : ghost_imaging_g2(x, g, t);
        peak = std::max(peak, v);
    }
    const double scale = static_cast<double>(peak_counts) / peak / 1e8;
    CorrelationParams out = t;
    out.amplitude = t.amplitude * scale;
    out.background = t.background * scale;
    return out;
}

}  // namespace

TEST_CASE("scan normalization: arithmetic, zero-count floor, scaling") {
    ScanData scan;
    for (int i = 0; i < 8; ++i) {
        scan.positions.push_back(i * 0.1);
        scan.coincidences.push_back(100.0);
        scan.singles_a.push_back(1e4);
        scan.singles_b.push_back(1e4);
        scan.duration.push_back(60.0);
    }
    scan.coincidences[3] = 0.0;
    const auto pts = normalize_scan(scan);
    CHECK(rel_err(pts[0].value, 1e-6) < 1e-15);
    CHECK(rel_err(pts[0].sigma, 1e-7) < 1e-15);
    CHECK(rel_err(pts[3].sigma, 1.148 / 1e8) < 1e-12);  // 68% upper bound for n = 0

    ScanData doubled = scan;
    for (auto& s : doubled.singles_a) s *= 2.0;
    for (auto& s : doubled.singles_b) s *= 2.0;
    const auto pts2 = normalize_scan(doubled);
    CHECK(rel_err(pts2[0].value, pts[0].value / 4.0) < 1e-15);
    CHECK(rel_err(pts2[0].sigma, pts[0].sigma / 4.0) < 1e-15);

    ScanData zero = scan;
    zero.singles_a[5] = 0.0;
    CHECK_THROWS_WITH_AS(normalize_scan(zero), doctest::Contains("point 5"), DataError);
}

TEST_CASE("scan validation catches malformed data") {
    ScanData s;
    s.positions = {0.0, 0.1};
    s.coincidences = {1.0, 1.0};
    s.singles_a = {1.0, 1.0};
    s.singles_b = {1.0, 1.0};
    s.duration = {60.0, 60.0};
    CHECK_THROWS_AS(s.validate(), DataError);  // too short

    ScanData t;
    for (int i = 0; i < 8; ++i) {
        t.positions.push_back(i == 4 ? 0.3 : i * 0.1);  // duplicate position
        t.coincidences.push_back(1.0);
        t.singles_a.push_back(1.0);
        t.singles_b.push_back(1.0);
        t.duration.push_back(60.0);
    }
    CHECK_THROWS_AS(t.validate(), DataError);
    t.positions[4] = 0.4;
    for (std::size_t i = 5; i < 8; ++i) t.positions[i] = 0.4 + 0.1 * (i - 4);
    t.coincidences[2] = -1.0;
    CHECK_THROWS_AS(t.validate(), DataError);
}

TEST_CASE("noiseless round trip recovers the generating parameters") {
    const ExperimentGeometry g = reference_geometry();
    for (ModelKind kind : {ModelKind::Interference, ModelKind::Imaging}) {
        const CorrelationParams t = truth_for(kind, g);
        const auto data = noiseless_data(kind, g, t);
        const FitResult fit = fit_curve(data, kind, g, perturbed(t), ParamBounds{});
        REQUIRE(fit.converged);
        CHECK(rel_err(fit.params.sigma_plus, t.sigma_plus) < 1e-3);
        CHECK(rel_err(fit.params.sigma_minus, t.sigma_minus) < 1e-3);
        CHECK(rel_err(fit.params.amplitude, t.amplitude) < 1e-3);
        CHECK(rel_err(fit.params.center, t.center) < 1e-3);
        CHECK(rel_err(fit.params.background, t.background) < 1e-3);
        CHECK(fit.chi2 < 1e-10);
        CHECK(fit.dof == 61 - 5);
    }
}

TEST_CASE("Poisson-noised round trip lands within three standard errors") {
    const ExperimentGeometry g = reference_geometry();
    for (ModelKind kind : {ModelKind::Interference, ModelKind::Imaging}) {
        const CorrelationParams t = truth_for(kind, g);
        RunConfig cfg;
        cfg.geometry = g;
        cfg.mode = kind;
        cfg.scan_min = mode_grid(kind).front();
        cfg.scan_max = mode_grid(kind).back();
        cfg.scan_step = (cfg.scan_max - cfg.scan_min) / 60.0;
        cfg.seed = 42;
        const ScanData scan = synthesize_scan(cfg, t, 400);
        const auto data = normalize_scan(scan);
        const CorrelationParams truth_n = data_units_truth(t, kind, g, 400);
        const FitResult fit = fit_curve(data, kind, g, perturbed(truth_n), ParamBounds{});
        REQUIRE(fit.converged);
        const double se_sp = std::sqrt(fit.cov(0, 0));
        const double se_sm = std::sqrt(fit.cov(1, 1));
        CHECK(std::fabs(fit.params.sigma_plus - t.sigma_plus) <= 3.0 * se_sp);
        CHECK(std::fabs(fit.params.sigma_minus - t.sigma_minus) <= 3.0 * se_sm);
    }
}

TEST_CASE("model discrimination: the wrong model fits far worse") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Interference, g);
    RunConfig cfg;
    cfg.geometry = g;
    cfg.mode = ModelKind::Interference;
    cfg.scan_min = -0.05;
    cfg.scan_max = 0.05;
    cfg.scan_step = 0.1 / 60.0;
    cfg.seed = 42;
    const auto data = normalize_scan(synthesize_scan(cfg, t, 400));
    const CorrelationParams truth_n = data_units_truth(t, ModelKind::Interference, g, 400);

    const FitResult matched = fit_curve(data, ModelKind::Interference, g, perturbed(truth_n),
                                        ParamBounds{});
    REQUIRE(matched.converged);
    const FitResult wrong =
        fit_curve(data, ModelKind::Imaging, g, perturbed(truth_n), ParamBounds{});
    const double matched_q = matched.chi2 / matched.dof;
    const double wrong_q = wrong.chi2 / wrong.dof;
    CHECK(wrong_q >= 5.0 * matched_q);
}

TEST_CASE("accepted chi2 never increases") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    const auto data = noiseless_data(ModelKind::Imaging, g, t);
    const FitResult fit = fit_curve(data, ModelKind::Imaging, g, perturbed(t), ParamBounds{});
    REQUIRE(fit.chi2_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.chi2_trace.size(); ++i)
        CHECK(fit.chi2_trace[i] <= fit.chi2_trace[i - 1]);
}

TEST_CASE("shifting all positions shifts only the center estimate") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    auto data = noiseless_data(ModelKind::Imaging, g, t);
    const FitResult base = fit_curve(data, ModelKind::Imaging, g, perturbed(t), ParamBounds{});

    const double shift = 0.37;
    for (auto& d : data) d.position += shift;
    CorrelationParams init = perturbed(t);
    init.center += shift;
    const FitResult moved = fit_curve(data, ModelKind::Imaging, g, init, ParamBounds{});

    CHECK(std::fabs(moved.params.center - (base.params.center + shift)) < 1e-6);
    CHECK(rel_err(moved.params.sigma_plus, base.params.sigma_plus) < 1e-6);
    CHECK(rel_err(moved.params.sigma_minus, base.params.sigma_minus) < 1e-6);
    CHECK(rel_err(moved.params.amplitude, base.params.amplitude) < 1e-6);
    CHECK(std::fabs(moved.params.background - base.params.background) < 1e-6 * t.background + 1e-12);
}

TEST_CASE("scaling data and errors by k scales only amplitude and background") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    auto data = noiseless_data(ModelKind::Imaging, g, t);
    const FitResult base = fit_curve(data, ModelKind::Imaging, g, perturbed(t), ParamBounds{});

    const double k = 3.5;
    for (auto& d : data) {
        d.value *= k;
        d.sigma *= k;
    }
    CorrelationParams init = perturbed(t);
    init.amplitude *= k;
    init.background *= k;
    const FitResult scaled = fit_curve(data, ModelKind::Imaging, g, init, ParamBounds{});

    CHECK(rel_err(scaled.params.amplitude, k * base.params.amplitude) < 1e-8);
    CHECK(rel_err(scaled.params.background, k * base.params.background) < 1e-8);
    CHECK(rel_err(scaled.params.sigma_plus, base.params.sigma_plus) < 1e-8);
    CHECK(rel_err(scaled.params.sigma_minus, base.params.sigma_minus) < 1e-8);
    CHECK(std::fabs(scaled.params.center - base.params.center) < 1e-8);
    CHECK(std::fabs(scaled.chi2 - base.chi2) < 1e-8 * std::max(base.chi2, 1.0));
}

TEST_CASE("covariance agrees with a finite-difference Hessian") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    const auto data = noiseless_data(ModelKind::Imaging, g, t);
    const FitResult fit = fit_curve(data, ModelKind::Imaging, g, perturbed(t), ParamBounds{});
    REQUIRE(fit.converged);

    auto chi2_at = [&](const CorrelationParams& p) {
        double acc = 0.0;
        for (const auto& d : data) {
            const double r = (d.value - ghost_imaging_g2(d.position, g, p)) / d.sigma;
            acc += r * r;
        }
        return acc;
    };
    auto param_array = [](const CorrelationParams& p) {
        return std::array<double, 5>{p.sigma_plus, p.sigma_minus, p.amplitude, p.center,
                                     p.background};
    };
    auto from_array = [](const std::array<double, 5>& a) {
        CorrelationParams p;
        p.sigma_plus = a[0];
        p.sigma_minus = a[1];
        p.amplitude = a[2];
        p.center = a[3];
        p.background = a[4];
        return p;
    };

    const auto th = param_array(fit.params);
    Eigen::MatrixXd H(5, 5);
    std::array<double, 5> h{};
    for (int i = 0; i < 5; ++i) h[i] = 1e-4 * (1.0 + std::fabs(th[i]));
    for (int i = 0; i < 5; ++i) {
        for (int j = i; j < 5; ++j) {
            auto pp = th, pm = th, mp = th, mm = th;
            pp[i] += h[i]; pp[j] += h[j];
            pm[i] += h[i]; pm[j] -= h[j];
            mp[i] -= h[i]; mp[j] += h[j];
            mm[i] -= h[i]; mm[j] -= h[j];
            const double v = (chi2_at(from_array(pp)) - chi2_at(from_array(pm)) -
                              chi2_at(from_array(mp)) + chi2_at(from_array(mm))) /
                             (4.0 * h[i] * h[j]);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    const Eigen::MatrixXd cov_fd = (0.5 * H).inverse();
    Eigen::MatrixXd cov_fit(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) cov_fit(i, j) = fit.cov(i, j);
    const double rel = (cov_fit - cov_fd).norm() / cov_fd.norm();
    CHECK(rel < 0.05);
}

TEST_CASE("bounds freeze parameters and init is validated") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    const auto data = noiseless_data(ModelKind::Imaging, g, t);

    CorrelationParams init = perturbed(t);
    init.background = t.background;  // frozen at truth
    const ParamBounds frozen = ParamBounds::freeze(init, false, false, false, false, true);
    const FitResult fit = fit_curve(data, ModelKind::Imaging, g, init, frozen);
    REQUIRE(fit.converged);
    CHECK(fit.params.background == t.background);
    CHECK(fit.dof == 61 - 4);
    for (int j = 0; j < 5; ++j) CHECK(fit.cov(4, j) == 0.0);

    ParamBounds bad;
    bad.lower[0] = 2.0;
    bad.upper[0] = 3.0;
    CorrelationParams outside = perturbed(t);
    outside.sigma_plus = 1.0;
    CHECK_THROWS_AS(fit_curve(data, ModelKind::Imaging, g, outside, bad), ValidationError);
}

TEST_CASE("derive_verdict: reference widths give a steerable product") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    const auto data = noiseless_data(ModelKind::Imaging, g, t);
    const FitResult fit = fit_curve(data, ModelKind::Imaging, g, perturbed(t), ParamBounds{});
    REQUIRE(fit.converged);

    const auto [pair, verdict] = derive_verdict(fit);
    CHECK(std::fabs(pair.dp_plus - 1.053) < 5e-4);
    CHECK(std::fabs(pair.dx_minus - 0.0137) < 5e-6);
    CHECK(std::fabs(verdict.product - 2.08e-4) < 1e-6);
    CHECK(verdict.entangled);
    CHECK(verdict.steerable);
}

TEST_CASE("derive_verdict error propagation scales linearly") {
    FitResult fit;
    fit.converged = true;
    fit.params.sigma_plus = kSp;
    fit.params.sigma_minus = kSm;

    const auto [p0, v0] = derive_verdict(fit);
    CHECK(v0.product_err == 0.0);
    CHECK(p0.dp_plus_err == 0.0);

    fit.covariance[0 * 5 + 0] = 1e-4;
    fit.covariance[1 * 5 + 1] = 1e-2;
    fit.covariance[0 * 5 + 1] = fit.covariance[1 * 5 + 0] = 2e-4;
    const auto [p1, v1] = derive_verdict(fit);
    for (auto& c : fit.covariance) c *= 100.0;
    const auto [p2, v2] = derive_verdict(fit);
    CHECK(rel_err(v2.product_err, 10.0 * v1.product_err) < 1e-12);
    CHECK(rel_err(p2.dp_plus_err, 10.0 * p1.dp_plus_err) < 1e-12);
}

TEST_CASE("derive_verdict refuses an unconverged fit") {
    const ExperimentGeometry g = reference_geometry();
    const CorrelationParams t = truth_for(ModelKind::Imaging, g);
    const auto data = noiseless_data(ModelKind::Imaging, g, t);
    FitOptions opts;
    opts.max_iterations = 0;
    const FitResult fit = fit_curve(data, ModelKind::Imaging, g, perturbed(t), ParamBounds{}, opts);
    CHECK(!fit.converged);
    CHECK_THROWS_AS(derive_verdict(fit), FitError);
}

TEST_CASE("initial guess lands in the right decade") {
    const ExperimentGeometry g = reference_geometry();
    for (ModelKind kind : {ModelKind::Interference, ModelKind::Imaging}) {
        const CorrelationParams t = truth_for(kind, g);
        const auto data = noiseless_data(kind, g, t);
        const CorrelationParams guess = initial_guess(data, kind, g);
        CHECK(std::fabs(guess.center - t.center) < 0.2 * (data.back().position - data.front().position));
        CHECK(guess.amplitude > 0.0);
        // the guessed widths seed a successful fit
        const FitResult fit = fit_curve(data, kind, g, guess, ParamBounds{});
        CHECK(fit.converged);
    }
}
