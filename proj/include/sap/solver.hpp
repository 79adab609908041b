#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sap/errors.hpp"
#include "sap/kernels.hpp"
#include "sap/rng.hpp"
#include "sap/sketch.hpp"
#include "sap/spectral.hpp"

namespace sap {

enum class NormKind { Euclidean, Weighted };

// Consistent linear system A x = b solved for the least-norm correction of
// x0, under the Euclidean norm or a weighted B-norm (B symmetric PD).
struct LinearSystemProblem {
    Matrix A;   // m x d
    Vector b;   // m
    Vector x0;  // d
    NormKind norm = NormKind::Euclidean;
    Matrix B;   // d x d, Weighted only

    static LinearSystemProblem euclidean(Matrix a, Vector b, Vector x0) {
        return {std::move(a), std::move(b), std::move(x0), NormKind::Euclidean, Matrix()};
    }
    static LinearSystemProblem weighted(Matrix a, Vector b, Vector x0, Matrix bmat) {
        if (!is_symmetric(bmat)) throw NotSymmetricError("weighted norm: B not symmetric");
        EigenDecomposition d = sym_eig(bmat);
        if (d.values(d.values.size() - 1) <= 1e-10 * d.values.cwiseAbs().maxCoeff())
            throw NotPDError("weighted norm: B not positive definite");
        return {std::move(a), std::move(b), std::move(x0), NormKind::Weighted, std::move(bmat)};
    }
};

// Precomputed quantities shared by every step of one run.
struct SolveContext {
    Matrix Binv_At;  // B^{-1} A^T (identity B for Euclidean), d x m
    Matrix G;        // A B^{-1} A^T, m x m
    Matrix Bhalf;    // B^{1/2}, for norms and the whitened system
    Matrix M;        // whitened system A B^{-1/2}, m x d

    static SolveContext build(const LinearSystemProblem& p) {
        SolveContext c;
        if (p.norm == NormKind::Euclidean) {
            c.Binv_At = p.A.transpose();
            c.Bhalf = Matrix::Identity(p.A.cols(), p.A.cols());
            c.M = p.A;
        } else {
            Eigen::LLT<Matrix> llt(symmetrize(p.B));
            if (llt.info() != Eigen::Success) throw NotPDError("weighted norm: B not PD");
            c.Binv_At = llt.solve(Matrix(p.A.transpose()));
            c.Bhalf = sqrt_psd(p.B);
            c.M = p.A * llt.solve(c.Bhalf);  // A B^{-1} B^{1/2} = A B^{-1/2}
        }
        c.G = p.A * c.Binv_At;
        return c;
    }
};

inline void check_consistent(const LinearSystemProblem& p) {
    Vector fitted = p.A * (pinv(p.A) * p.b);
    if ((fitted - p.b).norm() > 1e-8 * std::max(1.0, p.b.norm()))
        throw InconsistentSystemError("system A x = b is inconsistent");
}

// Least-norm-correction solution: the projection of x0 onto {x : A x = b}
// in the working norm.
inline Vector reference_solution(const LinearSystemProblem& p) {
    check_consistent(p);
    Vector r0 = p.b - p.A * p.x0;
    if (p.norm == NormKind::Euclidean) return p.x0 + pinv(p.A) * r0;
    SolveContext c = SolveContext::build(p);
    return p.x0 + c.Binv_At * (pinv(c.G) * r0);
}

// g = B^{-1} A^T S (S^T A B^{-1} A^T S)^dagger S^T (A y - b). Depends on y
// only through the residual; vanishes when A y = b.
inline Vector step_gradient(const LinearSystemProblem& p, const Matrix& s, const Vector& y) {
    SolveContext c = SolveContext::build(p);
    Vector r = p.A * y - p.b;
    Matrix core = pinv(Matrix(s.transpose() * c.G * s));
    return c.Binv_At * (s * (core * (s.transpose() * r)));
}

struct TraceRow {
    int iter = 0;
    double dist_sq = std::numeric_limits<double>::quiet_NaN();
    double lyapunov = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
};

struct SolverTrace {
    std::vector<TraceRow> rows;
    std::uint64_t seed = 0;
    std::string method;
    AccelParams params;
};

struct SolveOptions {
    std::optional<Vector> reference;           // x*, enables dist_sq / Lyapunov
    const SpectralSummary* summary = nullptr;  // E[Z]^dagger for Psi
    std::optional<std::vector<int>> forced_atoms;  // test hook: fixed atom sequence
    int log_every = 1;
    double residual_tol = 0.0;  // > 0 enables early stop at tol * max(1, ||b||)
};

namespace detail {

class SketchStream {
public:
    SketchStream(const SketchDistribution& dist, std::uint64_t seed,
                 const std::optional<std::vector<int>>& forced)
        : dist_(dist), rng_(make_rng(seed)) {
        if (forced) {
            forced_ = *forced;
            atoms_ = enumerate_atoms(dist);
        }
    }

    Matrix next() {
        if (!forced_.empty()) {
            int idx = forced_[pos_ % forced_.size()];
            ++pos_;
            return atoms_.at(static_cast<std::size_t>(idx)).S;
        }
        return sample(dist_, rng_).S;
    }

private:
    const SketchDistribution& dist_;
    Rng rng_;
    std::vector<int> forced_;
    std::vector<Atom> atoms_;
    std::size_t pos_ = 0;
};

struct TraceRecorder {
    const LinearSystemProblem& p;
    const SolveContext& ctx;
    const SolveOptions& opt;
    double lyap_weight;
    SolverTrace& trace;

    void record(int k, const Vector& x, const Vector* v) const {
        if (opt.log_every > 1 && k % opt.log_every != 0) return;
        TraceRow row;
        row.iter = k;
        row.residual = (p.A * x - p.b).norm();
        if (opt.reference) {
            Vector ex = ctx.Bhalf * (x - *opt.reference);
            row.dist_sq = ex.squaredNorm();
            if (opt.summary && v) {
                Vector ev = ctx.Bhalf * (*v - *opt.reference);
                row.lyapunov = ev.dot(opt.summary->EZ_pinv * ev) + lyap_weight * row.dist_sq;
            }
        }
        trace.rows.push_back(row);
    }
};

inline void check_params(const AccelParams& params, const SpectralSummary* summary) {
    if (!summary) return;
    if (std::abs(params.theta - summary->theta) > 1e-9 ||
        std::abs(params.nu - summary->nu) > 1e-9)
        throw ParamMismatchError("params theta/nu disagree with spectral summary");
}

}  // namespace detail

// Accelerated sketch-and-project: y = eta v + (1-eta) x; x+ = y - omega g;
// v+ = beta v + (1-beta) y - gamma g. omega = 1 except for the Omega variant.
inline SolverTrace run_accelerated(const LinearSystemProblem& problem,
                                   const SketchDistribution& dist,
                                   const AccelParams& params, int iters,
                                   std::uint64_t seed, const SolveOptions& opt = {}) {
    if (iters < 0) throw ParamOutOfRangeError("iters must be >= 0");
    detail::check_params(params, opt.summary);
    SolveContext ctx = SolveContext::build(problem);
    detail::SketchStream stream(dist, seed, opt.forced_atoms);

    SolverTrace trace;
    trace.seed = seed;
    trace.method = "accel";
    trace.params = params;
    detail::TraceRecorder rec{problem, ctx, opt, params.lyapunov_weight, trace};

    const double omega = params.variant == Variant::Omega ? params.omega : 1.0;
    const double stop = opt.residual_tol > 0.0
                            ? opt.residual_tol * std::max(1.0, problem.b.norm())
                            : -1.0;
    Vector x = problem.x0;
    Vector v = problem.x0;
    rec.record(0, x, &v);
    for (int k = 0; k < iters; ++k) {
        Vector y = params.eta * v + (1.0 - params.eta) * x;
        Vector r = problem.A * y - problem.b;
        Matrix s = stream.next();
        Matrix core = pinv(Matrix(s.transpose() * ctx.G * s));
        Vector g = ctx.Binv_At * (s * (core * (s.transpose() * r)));
        x = y - omega * g;
        v = params.beta * v + (1.0 - params.beta) * y - params.gamma * g;
        rec.record(k + 1, x, &v);
        if (stop > 0.0 && (problem.A * x - problem.b).norm() <= stop) break;
    }
    return trace;
}

// Non-accelerated baseline: x+ = x - omega g(x). Expected contraction of
// ||x - x*||^2 in the working norm is 1 - omega(2-omega) theta.
inline SolverTrace run_basic(const LinearSystemProblem& problem,
                             const SketchDistribution& dist, double omega, int iters,
                             std::uint64_t seed, const SolveOptions& opt = {}) {
    if (!(omega > 0.0 && omega < 2.0)) throw ParamOutOfRangeError("omega must lie in (0, 2)");
    if (iters < 0) throw ParamOutOfRangeError("iters must be >= 0");
    SolveContext ctx = SolveContext::build(problem);
    detail::SketchStream stream(dist, seed, opt.forced_atoms);

    SolverTrace trace;
    trace.seed = seed;
    trace.method = "basic";
    detail::TraceRecorder rec{problem, ctx, opt, 0.0, trace};

    const double stop = opt.residual_tol > 0.0
                            ? opt.residual_tol * std::max(1.0, problem.b.norm())
                            : -1.0;
    Vector x = problem.x0;
    rec.record(0, x, nullptr);
    for (int k = 0; k < iters; ++k) {
        Vector r = problem.A * x - problem.b;
        Matrix s = stream.next();
        Matrix core = pinv(Matrix(s.transpose() * ctx.G * s));
        Vector g = ctx.Binv_At * (s * (core * (s.transpose() * r)));
        x -= omega * g;
        rec.record(k + 1, x, nullptr);
        if (stop > 0.0 && (problem.A * x - problem.b).norm() <= stop) break;
    }
    return trace;
}

}  // namespace sap
