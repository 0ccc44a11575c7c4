#include "ghostfit/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "ghostfit/errors.hpp"

namespace ghostfit {

namespace {

// 68% upper Poisson bound for zero observed counts: 1 - exp(-mu) = 0.6827
constexpr double kZeroCountSigma = 1.148;

std::array<double, kNumParams> pack(const CorrelationParams& p) {
    return {p.sigma_plus, p.sigma_minus, p.amplitude, p.center, p.background};
}

CorrelationParams unpack(const std::array<double, kNumParams>& a) {
    CorrelationParams p;
    p.sigma_plus = a[0];
    p.sigma_minus = a[1];
    p.amplitude = a[2];
    p.center = a[3];
    p.background = a[4];
    return p;
}

double model_value(ModelKind kind, const ExperimentGeometry& g,
                   const CorrelationParams& p, double x) {
    switch (kind) {
        case ModelKind::Interference: return ghost_interference_g2(x, g, p);
        case ModelKind::Imaging: return ghost_imaging_g2(x, g, p);
        default:
            throw ValidationError("fit_curve: only the interference and imaging models are fittable");
    }
}

}  // namespace

void ScanData::validate() const {
    const std::size_t n = positions.size();
    if (n < 7) throw DataError("scan: need at least 7 points");
    if (coincidences.size() != n || singles_a.size() != n || singles_b.size() != n ||
        duration.size() != n)
        throw DataError("scan: column lengths differ");
    for (std::size_t i = 0; i < n; ++i) {
        if (coincidences[i] < 0.0 || singles_a[i] < 0.0 || singles_b[i] < 0.0)
            throw DataError("scan: negative count at point " + std::to_string(i));
        if (!(duration[i] > 0.0))
            throw DataError("scan: non-positive duration at point " + std::to_string(i));
        if (i > 0 && !(positions[i] > positions[i - 1]))
            throw DataError("scan: positions not strictly increasing at point " +
                            std::to_string(i));
    }
}

std::vector<NormalizedPoint> normalize_scan(const ScanData& scan) {
    scan.validate();
    std::vector<NormalizedPoint> out;
    out.reserve(scan.positions.size());
    for (std::size_t i = 0; i < scan.positions.size(); ++i) {
        const double prod = scan.singles_a[i] * scan.singles_b[i];
        if (!(prod > 0.0))
            throw DataError("scan: zero singles product at point " + std::to_string(i));
        const double c = scan.coincidences[i];
        const double count_err = c > 0.0 ? std::sqrt(c) : kZeroCountSigma;
        out.push_back({scan.positions[i], c / prod, count_err / prod});
    }
    return out;
}

ParamBounds ParamBounds::freeze(const CorrelationParams& p, bool sp, bool sm, bool amp,
                                bool center, bool background) {
    ParamBounds b;
    const auto v = pack(p);
    const std::array<bool, kNumParams> fr{sp, sm, amp, center, background};
    for (int i = 0; i < kNumParams; ++i)
        if (fr[i]) b.lower[i] = b.upper[i] = v[i];
    return b;
}

FitResult fit_curve(std::span<const NormalizedPoint> data, ModelKind kind,
                    const ExperimentGeometry& geometry, const CorrelationParams& init,
                    const ParamBounds& bounds, const FitOptions& options) {
    geometry.validate();
    init.validate();
    if (kind != ModelKind::Interference && kind != ModelKind::Imaging)
        throw ValidationError("fit_curve: only the interference and imaging models are fittable");

    std::array<double, kNumParams> theta = pack(init);
    std::vector<int> free_idx;
    for (int i = 0; i < kNumParams; ++i) {
        if (!(bounds.lower[i] <= bounds.upper[i]))
            throw ValidationError("fit bounds: lower > upper for parameter " + std::to_string(i));
        if (theta[i] < bounds.lower[i] || theta[i] > bounds.upper[i])
            throw ValidationError("fit init: parameter " + std::to_string(i) +
                                  " outside its bounds");
        if (bounds.lower[i] < bounds.upper[i]) free_idx.push_back(i);
    }
    const int nf = static_cast<int>(free_idx.size());
    const int n = static_cast<int>(data.size());
    if (n - nf <= 0) throw ValidationError("fit: no degrees of freedom left");
    for (const auto& d : data)
        if (!(d.sigma > 0.0)) throw DataError("fit: non-positive point error");

    auto residuals = [&](const std::array<double, kNumParams>& th, Eigen::VectorXd& r) {
        const CorrelationParams p = unpack(th);
        for (int i = 0; i < n; ++i)
            r[i] = (data[i].value - model_value(kind, geometry, p, data[i].position)) /
                   data[i].sigma;
    };

    auto jacobian = [&](const std::array<double, kNumParams>& th, const Eigen::VectorXd& r0,
                        Eigen::MatrixXd& J) {
        for (int c = 0; c < nf; ++c) {
            const int j = free_idx[c];
            auto th2 = th;
            double h = 1e-6 * (1.0 + std::fabs(th[j]));
            if (th[j] + h > bounds.upper[j]) h = -h;  // step inward at a bound
            th2[j] = th[j] + h;
            Eigen::VectorXd r1(n);
            residuals(th2, r1);
            J.col(c) = (r1 - r0) / h;
        }
    };

    FitResult res;
    Eigen::VectorXd r(n), r_try(n);
    residuals(theta, r);
    double chi2 = r.squaredNorm();
    res.chi2_trace.push_back(chi2);

    Eigen::MatrixXd J(n, nf);
    Eigen::MatrixXd N(nf, nf);
    Eigen::VectorXd grad(nf);

    jacobian(theta, r, J);
    N = J.transpose() * J;
    grad = J.transpose() * r;
    // Marquardt damping: lambda scales the diagonal, so it is dimensionless
    double lambda = 1e-3;
    double nu = 2.0;

    bool converged = false;
    int accepted = 0;
    while (accepted < options.max_iterations) {
        // solve in the unit-diagonal scaling: parameters of wildly
        // different magnitude otherwise wreck the conditioning
        Eigen::VectorXd d(nf);
        for (int i = 0; i < nf; ++i) d(i) = std::sqrt(std::max(N(i, i), 1e-300));
        Eigen::MatrixXd A(nf, nf);
        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j) A(i, j) = N(i, j) / (d(i) * d(j));
        for (int i = 0; i < nf; ++i) A(i, i) += lambda;
        const Eigen::VectorXd rhs = grad.cwiseQuotient(d);
        const Eigen::VectorXd delta = (-A.ldlt().solve(rhs)).cwiseQuotient(d);

        auto trial = theta;
        for (int c = 0; c < nf; ++c) {
            const int j = free_idx[c];
            trial[j] = std::clamp(theta[j] + delta[c], bounds.lower[j], bounds.upper[j]);
        }
        residuals(trial, r_try);
        const double chi2_try = r_try.squaredNorm();
        // reduction the quadratic model promises for this step
        const double predicted = -grad.dot(delta) - 0.5 * delta.dot(N * delta);

        if (chi2_try < chi2) {
            double step_rel = 0.0;
            for (int c = 0; c < nf; ++c) {
                const int j = free_idx[c];
                step_rel = std::max(step_rel, std::fabs(trial[j] - theta[j]) /
                                                  (1.0 + std::fabs(theta[j])));
            }
            const double drop = chi2 - chi2_try;
            const double gain = drop / std::max(predicted, 1e-300);
            theta = trial;
            r = r_try;
            chi2 = chi2_try;
            ++accepted;
            res.chi2_trace.push_back(chi2);
            const double shrink = 1.0 - std::pow(2.0 * gain - 1.0, 3.0);
            lambda = std::max(lambda * std::max(1.0 / 3.0, shrink), 1e-14);
            nu = 2.0;

            jacobian(theta, r, J);
            N = J.transpose() * J;
            grad = J.transpose() * r;

            if (step_rel < options.step_tol || drop < options.chi2_tol * std::max(chi2, 1e-300) ||
                grad.lpNorm<Eigen::Infinity>() < options.grad_tol) {
                converged = true;
                break;
            }
        } else {
            // once the model itself promises nothing, the basin is flat to
            // working precision
            if (predicted >= 0.0 && predicted <= options.chi2_tol * std::max(chi2, 1e-300)) {
                converged = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if (lambda > 1e16) break;
        }
    }

    res.params = unpack(theta);
    res.chi2 = chi2;
    res.dof = n - nf;
    res.converged = converged;
    res.iterations = accepted;

    // covariance from the normal matrix at the optimum, inverted in the
    // unit-diagonal scaling so the rank test sees correlations, not units
    jacobian(theta, r, J);
    N = J.transpose() * J;
    Eigen::VectorXd d(nf);
    for (int i = 0; i < nf; ++i) d(i) = std::sqrt(std::max(N(i, i), 1e-300));
    Eigen::MatrixXd C(nf, nf);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nf; ++j) C(i, j) = N(i, j) / (d(i) * d(j));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double rank_tol = 1e-12 * smax;
    Eigen::VectorXd inv_sv(nf);
    for (int i = 0; i < nf; ++i) {
        if (sv(i) > rank_tol) {
            inv_sv(i) = 1.0 / sv(i);
        } else {
            inv_sv(i) = 0.0;
            res.degenerate = true;
            const Eigen::VectorXd dir = svd.matrixV().col(i);
            for (int c = 0; c < nf; ++c)
                res.degenerate_direction[static_cast<std::size_t>(free_idx[c])] = dir(c);
        }
    }
    Eigen::MatrixXd cov_free =
        svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nf; ++j) cov_free(i, j) /= d(i) * d(j);
    const double scale = (res.dof > 0 && chi2 / res.dof > 1.0) ? chi2 / res.dof : 1.0;
    cov_free *= scale;
    for (int a = 0; a < nf; ++a)
        for (int b = 0; b < nf; ++b)
            res.covariance[static_cast<std::size_t>(free_idx[a]) * kNumParams + free_idx[b]] =
                cov_free(a, b);
    return res;
}

std::pair<UncertaintyPair, Verdict> derive_verdict(const FitResult& fit) {
    if (!fit.converged)
        throw FitError("derive_verdict: fit did not converge (chi2 = " +
                       std::to_string(fit.chi2) + " after " +
                       std::to_string(fit.iterations) + " accepted steps)");
    const double sp = fit.params.sigma_plus;
    const double sm = fit.params.sigma_minus;
    const double var_sp = fit.cov(0, 0);
    const double var_sm = fit.cov(1, 1);
    const double cov_ps = fit.cov(0, 1);

    UncertaintyPair pair = joint_uncertainties(sp, sm);
    pair.dp_plus_err = std::sqrt(std::max(var_sp, 0.0)) / std::numbers::sqrt2;
    pair.dx_minus_err = std::sqrt(std::max(var_sm, 0.0)) / (std::numbers::sqrt2 * sm * sm);

    Verdict v = classify(pair);
    // product = sigma_plus^2 / (4 sigma_minus^2); propagate with the
    // cross-covariance term included
    const double dP_dsp = 2.0 * v.product / sp;
    const double dP_dsm = -2.0 * v.product / sm;
    const double var_p = dP_dsp * dP_dsp * std::max(var_sp, 0.0) +
                         dP_dsm * dP_dsm * std::max(var_sm, 0.0) +
                         2.0 * dP_dsp * dP_dsm * cov_ps;
    v.product_err = std::sqrt(std::max(var_p, 0.0));
    return {pair, v};
}

CorrelationParams initial_guess(std::span<const NormalizedPoint> data, ModelKind kind,
                                const ExperimentGeometry& geometry) {
    geometry.validate();
    if (data.size() < 7) throw DataError("initial_guess: need at least 7 points");

    std::vector<double> edge;
    const std::size_t k = std::min<std::size_t>(3, data.size() / 2);
    for (std::size_t i = 0; i < k; ++i) {
        edge.push_back(data[i].value);
        edge.push_back(data[data.size() - 1 - i].value);
    }
    std::sort(edge.begin(), edge.end());
    const double b = std::max(edge[edge.size() / 2], 0.0);

    double peak = 0.0, wsum = 0.0, xsum = 0.0, x2sum = 0.0;
    for (const auto& d : data) {
        peak = std::max(peak, d.value);
        const double w = std::max(d.value - b, 0.0);
        wsum += w;
        xsum += w * d.position;
        x2sum += w * d.position * d.position;
    }
    const double xc = wsum > 0.0 ? xsum / wsum : 0.5 * (data.front().position + data.back().position);
    const double var = wsum > 0.0 ? std::max(x2sum / wsum - xc * xc, 1e-12) : 1.0;
    const double width = std::sqrt(var);

    // one-parameter width match: assume a strongly correlated pair with
    // 2 sigma_minus = 20 sigma_plus and bisect sigma_plus until the model
    // envelope RMS width matches the data
    auto envelope_width = [&](double sp) {
        CorrelationParams p;
        p.sigma_plus = sp;
        p.sigma_minus = 10.0 * sp;
        p.amplitude = 1.0;
        p.center = 0.0;
        p.background = 0.0;
        double m = 0.0, mx2 = 0.0;
        const double lo = data.front().position - xc;
        const double hi = data.back().position - xc;
        for (int i = 0; i <= 80; ++i) {
            const double x = lo + (hi - lo) * i / 80.0;
            const double v = model_value(kind, geometry, p, x);
            m += v;
            mx2 += v * x * x;
        }
        return m > 0.0 ? std::sqrt(mx2 / m) : 0.0;
    };
    // width vs sigma_plus is monotone but in mode-dependent direction;
    // a coarse log sweep avoids caring which way
    double sp = 1.0, best = 1e300;
    for (int i = 0; i <= 48; ++i) {
        const double cand = 1e-3 * std::pow(1e6, i / 48.0);
        const double miss = std::fabs(envelope_width(cand) - width);
        if (miss < best) {
            best = miss;
            sp = cand;
        }
    }

    CorrelationParams p;
    p.sigma_plus = sp;
    p.sigma_minus = 10.0 * sp;
    p.amplitude = 1.0;
    p.center = xc;
    p.background = b;
    const double raw_peak = [&] {
        double m = 0.0;
        for (const auto& d : data) m = std::max(m, model_value(kind, geometry, p, d.position) - b);
        return m;
    }();
    p.amplitude = raw_peak > 0.0 ? std::max(peak - b, 1e-30) / raw_peak : 1.0;
    return p;
}

}  // namespace ghostfit
