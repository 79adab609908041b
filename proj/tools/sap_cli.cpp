// Command-line front end: solve / invert / params / experiment rate.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sap/csv.hpp"
#include "sap/harness.hpp"
#include "sap/inversion.hpp"
#include "sap/solver.hpp"
#include "sap/spectral.hpp"

namespace {

struct NormChoice {
    sap::NormKind kind = sap::NormKind::Euclidean;
    bool matrix_norm = false;  // B = A shorthand
    std::string b_file;
};

NormChoice parse_norm(const std::string& text) {
    NormChoice n;
    if (text == "euclid") return n;
    if (text == "matrixnorm") {
        n.kind = sap::NormKind::Weighted;
        n.matrix_norm = true;
        return n;
    }
    if (text.rfind("weighted:", 0) == 0) {
        n.kind = sap::NormKind::Weighted;
        n.b_file = text.substr(9);
        return n;
    }
    throw CLI::ValidationError("--norm must be euclid, matrixnorm, or weighted:<B.csv>");
}

void write_solver_trace(const std::string& path, const sap::SolverTrace& trace) {
    std::ofstream out(path);
    if (!out) throw sap::IoError("cannot write " + path);
    out << "iter,dist_sq,lyapunov,residual\n";
    for (const sap::TraceRow& row : trace.rows) {
        out << row.iter << ',';
        if (std::isfinite(row.dist_sq)) out << sap::format_value(row.dist_sq);
        out << ',';
        if (std::isfinite(row.lyapunov)) out << sap::format_value(row.lyapunov);
        out << ',' << sap::format_value(row.residual) << '\n';
    }
}

void write_inversion_trace(const std::string& path, const sap::InversionTrace& trace) {
    std::ofstream out(path);
    if (!out) throw sap::IoError("cannot write " + path);
    out << "iter,dist_sq,min_eig_X\n";
    for (const sap::InversionTraceRow& row : trace.rows)
        out << row.iter << ',' << sap::format_value(row.dist_sq) << ','
            << sap::format_value(row.min_eig_X) << '\n';
}

sap::Variant parse_variant(const std::string& v) {
    if (v == "default") return sap::Variant::Default;
    if (v == "omega") return sap::Variant::Omega;
    if (v == "family") return sap::Variant::Family;
    throw CLI::ValidationError("--variant must be default, omega, or family");
}

sap::AccelParams variant_params(sap::Variant variant, double theta, double nu,
                                double omega, double s) {
    switch (variant) {
        case sap::Variant::Default: return sap::default_params(theta, nu);
        case sap::Variant::Omega: return sap::omega_params(theta, nu, omega);
        case sap::Variant::Family: return sap::family_params(theta, nu, s);
    }
    throw CLI::ValidationError("unknown variant");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accelerated sketch-and-project solvers"};
    app.require_subcommand(1);

    // ---- solve ----
    std::string matrix_file, rhs_file, x0_file, norm_text = "euclid", dist_spec;
    std::string method = "accel", variant_text = "default", out_file = "trace.csv";
    double omega = 1.0, s_param = 1.0, tol = 1e-12;
    int iters = 100, mc_samples = 50000, log_every = 1;
    std::uint64_t seed = 0;

    CLI::App* solve = app.add_subcommand("solve", "Solve a consistent linear system A x = b");
    solve->add_option("--matrix", matrix_file, "system matrix CSV")->required();
    solve->add_option("--rhs", rhs_file, "right-hand side CSV")->required();
    solve->add_option("--x0", x0_file, "start vector CSV (default zero)");
    solve->add_option("--norm", norm_text, "euclid | weighted:<B.csv> | matrixnorm");
    solve->add_option("--dist", dist_spec, "sketch distribution spec")->required();
    solve->add_option("--method", method, "accel | basic");
    solve->add_option("--omega", omega, "stepsize (basic, or accel omega variant)");
    solve->add_option("--variant", variant_text, "default | omega | family");
    solve->add_option("--s", s_param, "family variant knob");
    solve->add_option("--iters", iters, "iteration budget")->required();
    solve->add_option("--seed", seed, "PRNG seed");
    solve->add_option("--tol", tol, "relative residual early-stop tolerance (0 disables)");
    solve->add_option("--log-every", log_every, "trace thinning");
    solve->add_option("--mc-samples", mc_samples, "Monte Carlo samples for E[Z] (gaussian sketches)");
    solve->add_option("--out", out_file, "trace CSV path");

    // ---- invert ----
    std::string inv_matrix, inv_dist, inv_method = "accel", inv_x0, inv_out = "trace.csv";
    int inv_iters = 100;
    std::uint64_t inv_seed = 0;
    CLI::App* invert = app.add_subcommand("invert", "Invert a symmetric PD matrix");
    invert->add_option("--matrix", inv_matrix, "matrix CSV")->required();
    invert->add_option("--dist", inv_dist, "sketch distribution spec")->required();
    invert->add_option("--method", inv_method, "accel | basic");
    invert->add_option("--iters", inv_iters, "iteration budget")->required();
    invert->add_option("--seed", inv_seed, "PRNG seed");
    invert->add_option("--x0", inv_x0, "initial X CSV (default zero)");
    invert->add_option("--out", inv_out, "trace CSV path");

    // ---- params ----
    std::string p_matrix, p_dist, p_norm = "matrixnorm", p_format = "table";
    std::vector<std::string> p_variants;
    double p_omega = 1.0, p_s = 1.0;
    CLI::App* params_cmd = app.add_subcommand("params", "Print spectral constants and parameters");
    params_cmd->add_option("--matrix", p_matrix, "system matrix CSV")->required();
    params_cmd->add_option("--dist", p_dist, "sketch distribution spec")->required();
    params_cmd->add_option("--norm", p_norm, "euclid | weighted:<B.csv> | matrixnorm");
    params_cmd->add_option("--variant", p_variants, "default | omega | family (repeatable)");
    params_cmd->add_option("--omega", p_omega, "omega variant stepsize");
    params_cmd->add_option("--s", p_s, "family variant knob");
    params_cmd->add_option("--format", p_format, "table | csv");

    // ---- experiment rate ----
    std::string e_gen, e_dist, e_method = "accel", e_variant = "default", e_outdir = "out";
    double e_omega = 1.0, e_s = 1.0;
    int e_trials = 100, e_iters = 60, e_warmup = 5, e_window = -1;
    std::uint64_t e_seed = 0;
    CLI::App* experiment = app.add_subcommand("experiment", "Empirical rate experiments");
    CLI::App* rate = experiment->add_subcommand("rate", "Fit empirical vs. theoretical rates");
    rate->add_option("--gen", e_gen, "problem generator spec")->required();
    rate->add_option("--dist", e_dist, "sketch distribution spec")->required();
    rate->add_option("--method", e_method, "accel | basic");
    rate->add_option("--variant", e_variant, "default | omega | family");
    rate->add_option("--omega", e_omega, "stepsize");
    rate->add_option("--s", e_s, "family variant knob");
    rate->add_option("--trials", e_trials, "independent runs")->required();
    rate->add_option("--iters", e_iters, "iterations per run")->required();
    rate->add_option("--seed", e_seed, "master seed");
    rate->add_option("--warmup", e_warmup, "iterations skipped before the fit");
    rate->add_option("--window", e_window, "fit window length (default: rest)");
    rate->add_option("--outdir", e_outdir, "output directory")->required();
    experiment->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            sap::Matrix a = sap::read_matrix_csv(matrix_file);
            sap::Vector b = sap::read_vector_csv(rhs_file);
            sap::Vector x0 = x0_file.empty() ? sap::Vector(sap::Vector::Zero(a.cols()))
                                             : sap::read_vector_csv(x0_file);
            NormChoice norm = parse_norm(norm_text);
            sap::LinearSystemProblem problem =
                norm.kind == sap::NormKind::Euclidean
                    ? sap::LinearSystemProblem::euclidean(a, b, x0)
                    : sap::LinearSystemProblem::weighted(
                          a, b, x0, norm.matrix_norm ? a : sap::read_matrix_csv(norm.b_file));

            sap::SketchDistribution dist =
                sap::parse_dist(dist_spec, static_cast<int>(a.rows()), &a);
            sap::SolveContext ctx = sap::SolveContext::build(problem);
            sap::SummaryOptions sopt;
            if (!dist.discrete()) {
                sopt.mode = sap::EstimationMode::MonteCarlo;
                sopt.mc_samples = mc_samples;
                sopt.mc_seed = sap::derive_seed(seed, 0xe2);
            }
            sap::SpectralSummary summary = sap::spectral_summary_system(ctx.M, dist, sopt);

            sap::SolveOptions opt;
            opt.reference = sap::reference_solution(problem);
            opt.summary = &summary;
            opt.log_every = log_every;
            opt.residual_tol = tol;

            sap::SolverTrace trace;
            if (method == "accel") {
                sap::AccelParams params = variant_params(parse_variant(variant_text),
                                                         summary.theta, summary.nu, omega, s_param);
                trace = sap::run_accelerated(problem, dist, params, iters, seed, opt);
            } else if (method == "basic") {
                trace = sap::run_basic(problem, dist, omega, iters, seed, opt);
            } else {
                throw CLI::ValidationError("--method must be accel or basic");
            }
            write_solver_trace(out_file, trace);
            std::cout << "theta=" << summary.theta << " nu=" << summary.nu
                      << " final_residual=" << trace.rows.back().residual << "\n";
        } else if (*invert) {
            sap::Matrix a = sap::read_matrix_csv(inv_matrix);
            sap::SketchDistribution dist =
                sap::parse_dist(inv_dist, static_cast<int>(a.rows()), &a);
            sap::InvertOptions opt;
            if (!inv_x0.empty()) opt.X0 = sap::read_matrix_csv(inv_x0);

            sap::InversionTrace trace;
            if (inv_method == "accel") {
                sap::InversionSpectral spec = sap::inversion_spectral(a, dist);
                sap::AccelParams params = sap::default_params(spec.theta_qn, spec.nu_qn);
                opt.spectral = &spec;
                trace = sap::run_accel_inverse(a, dist, params, inv_iters, inv_seed, opt);
            } else if (inv_method == "basic") {
                trace = sap::run_basic_inverse(a, dist, inv_iters, inv_seed, opt);
            } else {
                throw CLI::ValidationError("--method must be accel or basic");
            }
            write_inversion_trace(inv_out, trace);
            std::cout << "final_dist_sq=" << trace.rows.back().dist_sq << "\n";
        } else if (*params_cmd) {
            sap::Matrix a = sap::read_matrix_csv(p_matrix);
            NormChoice norm = parse_norm(p_norm);
            sap::Vector zero = sap::Vector::Zero(a.cols());
            sap::Vector rhs = sap::Vector::Zero(a.rows());
            sap::LinearSystemProblem problem =
                norm.kind == sap::NormKind::Euclidean
                    ? sap::LinearSystemProblem::euclidean(a, rhs, zero)
                    : sap::LinearSystemProblem::weighted(
                          a, rhs, zero, norm.matrix_norm ? a : sap::read_matrix_csv(norm.b_file));
            sap::SketchDistribution dist =
                sap::parse_dist(p_dist, static_cast<int>(a.rows()), &a);
            sap::SolveContext ctx = sap::SolveContext::build(problem);
            sap::SpectralSummary summary = sap::spectral_summary_system(ctx.M, dist);

            if (p_variants.empty()) p_variants.push_back("default");
            const bool csv = p_format == "csv";
            if (csv)
                std::cout << "variant,theta,nu,beta,gamma,eta,rate\n";
            else
                std::cout << "variant    theta        nu           beta         gamma        "
                             "eta          rate\n";
            for (const std::string& vtext : p_variants) {
                sap::AccelParams p = variant_params(parse_variant(vtext), summary.theta,
                                                    summary.nu, p_omega, p_s);
                if (csv) {
                    std::cout << vtext << ',' << sap::format_value(p.theta) << ','
                              << sap::format_value(p.nu) << ',' << sap::format_value(p.beta)
                              << ',' << sap::format_value(p.gamma) << ','
                              << sap::format_value(p.eta) << ',' << sap::format_value(p.rate)
                              << '\n';
                } else {
                    std::cout << vtext << (vtext.size() < 8 ? std::string(8 - vtext.size(), ' ')
                                                            : " ");
                    for (double v : {p.theta, p.nu, p.beta, p.gamma, p.eta, p.rate}) {
                        std::ostringstream ss;
                        ss << "  " << std::setw(11) << std::setprecision(6) << v;
                        std::cout << ss.str();
                    }
                    std::cout << '\n';
                }
            }
        } else if (*experiment) {
            sap::ExperimentConfig cfg;
            cfg.gen = sap::parse_gen(e_gen);
            cfg.dist_spec = e_dist;
            cfg.method = e_method;
            cfg.variant = parse_variant(e_variant);
            cfg.omega = e_omega;
            cfg.s = e_s;
            cfg.trials = e_trials;
            cfg.iters = e_iters;
            cfg.seed = e_seed;
            cfg.warmup = e_warmup;
            cfg.window = e_window;
            cfg.outdir = e_outdir;
            sap::ExperimentResult res = sap::experiment_rate(cfg);
            std::cout << "theta=" << res.summary.theta << " nu=" << res.summary.nu
                      << " theoretical_rate=" << res.report.theoretical_rate
                      << " empirical_rate=" << res.report.empirical_rate
                      << " ci_halfwidth=" << res.report.ci_halfwidth << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
