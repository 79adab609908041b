#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sap/csv.hpp"
#include "sap/errors.hpp"
#include "sap/kernels.hpp"
#include "sap/rng.hpp"
#include "sap/solver.hpp"
#include "sap/spectral.hpp"

namespace sap {

enum class GeneratorKind { Identity, DiagSpectrum, RotatedSpectrum, Gram };

struct ProblemSpec {
    GeneratorKind gen = GeneratorKind::Identity;
    int d = 0;
    int m = 0;           // Gram only
    double lmin = 1.0;
    double lmax = 1.0;
    bool log_spacing = false;
    double delta = 0.0;  // Gram ridge
    std::uint64_t gen_seed = 0;
    std::string text;    // original spec string, echoed into reports
};

// Generator mini-grammar: identity:<d> | diagspec:<d>:<lmin>:<lmax>:<lin|log>
// | rotspec:<d>:<lmin>:<lmax>:<seed> | gram:<d>:<m>:<delta>:<seed>
inline ProblemSpec parse_gen(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    ProblemSpec p;
    p.text = spec;
    try {
        if (parts.size() == 2 && parts[0] == "identity") {
            p.gen = GeneratorKind::Identity;
            p.d = std::stoi(parts[1]);
        } else if (parts.size() == 5 && parts[0] == "diagspec") {
            p.gen = GeneratorKind::DiagSpectrum;
            p.d = std::stoi(parts[1]);
            p.lmin = std::stod(parts[2]);
            p.lmax = std::stod(parts[3]);
            if (parts[4] == "log") p.log_spacing = true;
            else if (parts[4] != "lin") throw BadSpecError("spacing must be lin or log");
        } else if (parts.size() == 5 && parts[0] == "rotspec") {
            p.gen = GeneratorKind::RotatedSpectrum;
            p.d = std::stoi(parts[1]);
            p.lmin = std::stod(parts[2]);
            p.lmax = std::stod(parts[3]);
            p.gen_seed = std::stoull(parts[4]);
        } else if (parts.size() == 5 && parts[0] == "gram") {
            p.gen = GeneratorKind::Gram;
            p.d = std::stoi(parts[1]);
            p.m = std::stoi(parts[2]);
            p.delta = std::stod(parts[3]);
            p.gen_seed = std::stoull(parts[4]);
        } else {
            throw BadSpecError("unrecognized generator spec: " + spec);
        }
    } catch (const BadSpecError&) {
        throw;
    } catch (const std::exception&) {
        throw BadSpecError("malformed generator spec: " + spec);
    }
    if (p.d < 1) throw BadSpecError("generator dimension must be positive");
    if (p.gen == GeneratorKind::DiagSpectrum || p.gen == GeneratorKind::RotatedSpectrum) {
        if (!(p.lmin > 0.0 && p.lmax >= p.lmin))
            throw BadSpecError("need 0 < lmin <= lmax");
    }
    if (p.gen == GeneratorKind::Gram && (p.m < 1 || p.delta < 0.0))
        throw BadSpecError("gram needs m >= 1 and delta >= 0");
    return p;
}

inline Vector spaced_spectrum(int d, double lmin, double lmax, bool log_spacing) {
    Vector v(d);
    if (d == 1) {
        v(0) = lmin;
        return v;
    }
    for (int i = 0; i < d; ++i) {
        double t = static_cast<double>(i) / (d - 1);
        v(i) = log_spacing ? lmin * std::pow(lmax / lmin, t) : lmin + t * (lmax - lmin);
    }
    return v;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

// Random orthogonal matrix: QR of a Gaussian matrix with the sign convention
// diag(R) > 0, which makes the draw unambiguous.
inline Matrix random_orthogonal(int d, Rng& rng) {
    Matrix g = gaussian_matrix(d, d, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

inline Matrix generate_matrix(const ProblemSpec& spec) {
    switch (spec.gen) {
        case GeneratorKind::Identity:
            return Matrix::Identity(spec.d, spec.d);
        case GeneratorKind::DiagSpectrum:
            return Matrix(spaced_spectrum(spec.d, spec.lmin, spec.lmax, spec.log_spacing).asDiagonal());
        case GeneratorKind::RotatedSpectrum: {
            Rng rng = make_rng(spec.gen_seed, /*stream=*/1);
            Matrix q = random_orthogonal(spec.d, rng);
            Vector lam = spaced_spectrum(spec.d, spec.lmin, spec.lmax, spec.log_spacing);
            return symmetrize(q * lam.asDiagonal() * q.transpose());
        }
        case GeneratorKind::Gram: {
            Rng rng = make_rng(spec.gen_seed, /*stream=*/2);
            Matrix m = gaussian_matrix(spec.m, spec.d, rng);
            return symmetrize(m.transpose() * m +
                              spec.delta * Matrix::Identity(spec.d, spec.d));
        }
    }
    throw BadSpecError("unknown generator kind");
}

struct GeneratedProblem {
    LinearSystemProblem problem;
    Vector xstar;
};

// Problem with b = A x* for a Gaussian x* drawn from `seed`; x0 = 0. The
// experiments run in the B = A norm (the coordinate-sketch setting).
inline GeneratedProblem generate(const ProblemSpec& spec, std::uint64_t seed,
                                 bool matrix_norm = true) {
    Matrix a = generate_matrix(spec);
    Rng rng = make_rng(seed, /*stream=*/3);
    Vector xstar = gaussian_matrix(spec.d, 1, rng).col(0);
    Vector b = a * xstar;
    Vector x0 = Vector::Zero(spec.d);
    LinearSystemProblem p = matrix_norm
        ? LinearSystemProblem::weighted(a, b, x0, a)
        : LinearSystemProblem::euclidean(a, b, x0);
    return {std::move(p), std::move(xstar)};
}

struct RateReport {
    double theoretical_rate = 0.0;
    double empirical_rate = 0.0;
    double ci_halfwidth = 0.0;
    int trials = 0;
    int warmup = 0;
    int window = 0;
};

namespace detail {

inline double ols_rate(const std::vector<double>& mean, int warmup, int window) {
    // slope of log(mean_k) on k over [warmup, warmup + window]
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = window + 1;
    for (int i = 0; i <= window; ++i) {
        const double y = mean[static_cast<std::size_t>(warmup + i)];
        if (!(y > 0.0)) throw DegenerateWindowError("tracked quantity hit zero in the fit window");
        const double ly = std::log(y);
        sx += i;
        sy += ly;
        sxx += static_cast<double>(i) * i;
        sxy += i * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::exp(slope);
}

inline std::vector<double> pointwise_mean(const std::vector<std::vector<double>>& series,
                                          const std::vector<std::size_t>& pick) {
    std::vector<double> mean(series.front().size(), 0.0);
    for (std::size_t idx : pick)
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += series[idx][k];
    for (double& v : mean) v /= static_cast<double>(pick.size());
    return mean;
}

}  // namespace detail

// Fit the per-step contraction of the across-trial mean of a tracked
// quantity; ci_halfwidth from a 200-resample bootstrap over trials.
inline RateReport fit_rate(const std::vector<std::vector<double>>& series,
                           int warmup, int window) {
    if (series.size() < 2) throw DegenerateWindowError("need at least 2 traces");
    const std::size_t len = series.front().size();
    for (const auto& s : series)
        if (s.size() != len) throw DegenerateWindowError("traces must share a common length");
    if (static_cast<std::size_t>(warmup + window + 1) > len)
        throw DegenerateWindowError("traces shorter than warmup + window + 1");

    std::vector<std::size_t> all(series.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    RateReport rep;
    rep.trials = static_cast<int>(series.size());
    rep.warmup = warmup;
    rep.window = window;
    rep.empirical_rate = detail::ols_rate(detail::pointwise_mean(series, all), warmup, window);

    const int resamples = 200;
    Rng rng = make_rng(0x2e1b5ca7u);  // fixed: the CI is part of the deterministic output
    std::uniform_int_distribution<std::size_t> pick(0, series.size() - 1);
    std::vector<double> rates;
    rates.reserve(resamples);
    for (int r = 0; r < resamples; ++r) {
        std::vector<std::size_t> idx(series.size());
        for (auto& v : idx) v = pick(rng);
        try {
            rates.push_back(detail::ols_rate(detail::pointwise_mean(series, idx), warmup, window));
        } catch (const DegenerateWindowError&) {
            // resample collapsed to converged traces; skip it
        }
    }
    if (rates.size() >= 2) {
        std::sort(rates.begin(), rates.end());
        const auto quant = [&](double q) {
            double pos = q * (rates.size() - 1);
            std::size_t lo = static_cast<std::size_t>(pos);
            std::size_t hi = std::min(lo + 1, rates.size() - 1);
            double frac = pos - static_cast<double>(lo);
            return rates[lo] * (1.0 - frac) + rates[hi] * frac;
        };
        rep.ci_halfwidth = 0.5 * (quant(0.975) - quant(0.025));
    }
    return rep;
}

struct ExperimentConfig {
    ProblemSpec gen;
    std::string dist_spec;
    std::string method = "accel";   // accel | basic
    Variant variant = Variant::Default;
    double omega = 1.0;
    double s = 1.0;
    int trials = 100;
    int iters = 60;
    std::uint64_t seed = 0;
    int warmup = 5;
    int window = -1;  // default: everything after warmup
    std::string outdir;
};

struct ExperimentResult {
    RateReport report;
    SpectralSummary summary;
    AccelParams params;
    std::vector<double> mean_trace;
};

inline AccelParams params_for(const ExperimentConfig& cfg, double theta, double nu) {
    switch (cfg.variant) {
        case Variant::Default: return default_params(theta, nu);
        case Variant::Omega: return omega_params(theta, nu, cfg.omega);
        case Variant::Family: return family_params(theta, nu, cfg.s);
    }
    throw BadSpecError("unknown variant");
}

// Generate the problem, derive parameters, run independent trials, fit the
// empirical rate, and (optionally) write mean_trace.csv + rate_report.csv.
inline ExperimentResult experiment_rate(const ExperimentConfig& cfg) {
    GeneratedProblem gp = generate(cfg.gen, derive_seed(cfg.seed, 0xa11ce));
    const Matrix& a = gp.problem.A;
    SketchDistribution dist = parse_dist(cfg.dist_spec, cfg.gen.d, &a);

    SolveContext ctx = SolveContext::build(gp.problem);
    SpectralSummary summary = spectral_summary_system(ctx.M, dist);

    ExperimentResult res;
    res.summary = summary;

    const bool accel = cfg.method == "accel";
    double theoretical = 0.0;
    if (accel) {
        res.params = params_for(cfg, summary.theta, summary.nu);
        theoretical = res.params.rate;
    } else {
        const double alpha = 2.0 * cfg.omega - cfg.omega * cfg.omega;
        theoretical = 1.0 - alpha * summary.theta;
    }

    std::vector<std::vector<double>> series(static_cast<std::size_t>(cfg.trials));
    for (int t = 0; t < cfg.trials; ++t) {
        SolveOptions opt;
        opt.reference = gp.xstar;
        opt.summary = accel ? &summary : nullptr;
        const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        SolverTrace trace = accel
            ? run_accelerated(gp.problem, dist, res.params, cfg.iters, trial_seed, opt)
            : run_basic(gp.problem, dist, cfg.omega, cfg.iters, trial_seed, opt);
        std::vector<double>& s = series[static_cast<std::size_t>(t)];
        s.reserve(trace.rows.size());
        for (const TraceRow& row : trace.rows)
            s.push_back(accel ? row.lyapunov : row.dist_sq);
    }

    const int window = cfg.window > 0 ? cfg.window : cfg.iters - cfg.warmup;
    res.report = fit_rate(series, cfg.warmup, window);
    res.report.theoretical_rate = theoretical;

    std::vector<std::size_t> all(series.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    res.mean_trace = detail::pointwise_mean(series, all);

    if (!cfg.outdir.empty()) {
        std::filesystem::create_directories(cfg.outdir);
        const std::filesystem::path dir(cfg.outdir);
        {
            std::ofstream out(dir / "mean_trace.csv");
            out << "iter,mean\n";
            for (std::size_t k = 0; k < res.mean_trace.size(); ++k)
                out << k << ',' << format_value(res.mean_trace[k]) << '\n';
        }
        {
            std::ofstream out(dir / "rate_report.csv");
            out << "gen,dist,method,variant,omega,s,theta,nu,beta,gamma,eta,"
                   "theoretical_rate,empirical_rate,ci_halfwidth,trials,iters,"
                   "warmup,window,seed\n";
            const char* vname = cfg.variant == Variant::Default ? "default"
                                : cfg.variant == Variant::Omega ? "omega"
                                                                : "family";
            out << cfg.gen.text << ',' << cfg.dist_spec << ',' << cfg.method << ','
                << (accel ? vname : "-") << ',' << format_value(cfg.omega) << ','
                << format_value(cfg.s) << ',' << format_value(summary.theta) << ','
                << format_value(summary.nu) << ','
                << format_value(accel ? res.params.beta : 0.0) << ','
                << format_value(accel ? res.params.gamma : 0.0) << ','
                << format_value(accel ? res.params.eta : 0.0) << ','
                << format_value(res.report.theoretical_rate) << ','
                << format_value(res.report.empirical_rate) << ','
                << format_value(res.report.ci_halfwidth) << ',' << res.report.trials << ','
                << cfg.iters << ',' << res.report.warmup << ',' << res.report.window << ','
                << cfg.seed << '\n';
        }
    }
    return res;
}

}  // namespace sap
