#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "sap/errors.hpp"
#include "sap/kernels.hpp"
#include "sap/sketch.hpp"
#include "sap/solver.hpp"
#include "sap/spectral.hpp"

namespace sap {

inline void check_spd(const Matrix& a) {
    if (!is_symmetric(a)) throw NotPDError("matrix not symmetric");
    EigenDecomposition d = sym_eig(a);
    if (d.values(d.values.size() - 1) <= 1e-12 * d.values.cwiseAbs().maxCoeff())
        throw NotPDError("matrix not positive definite");
}

inline Matrix sketch_t_matrix(const Matrix& a, const Matrix& s) {
    return s * step_core(a, s) * s.transpose();
}

// One sketch-and-project inversion step with the symmetry constraint:
// X+ = T + (I - T A) X (I - A T), T = S (S^T A S)^dagger S^T. In hat-space
// coordinates this is Xhat+ = P + (I-P) Xhat (I-P).
inline Matrix basic_inverse_step(const Matrix& a, const Matrix& s, const Matrix& x) {
    check_spd(a);
    const Matrix t = sketch_t_matrix(a, s);
    const Eigen::Index d = a.rows();
    const Matrix left = Matrix::Identity(d, d) - t * a;
    Matrix next = t + left * x * left.transpose();
    return symmetrize(next);
}

// G with A^{1/2} G A^{1/2} = Z(Yhat - I); computable without A^{-1} and zero
// at Y = A^{-1}.
inline Matrix accel_gradient(const Matrix& a, const Matrix& s, const Matrix& y) {
    const Matrix t = sketch_t_matrix(a, s);
    const Eigen::Index d = a.rows();
    const Matrix left = Matrix::Identity(d, d) - t * a;
    Matrix g = y - left * y * left.transpose() - 2.0 * t + t * a * t;
    return symmetrize(g);
}

struct InversionSpectral {
    Matrix EP;        // d x d mean hat-space projector
    Matrix EZprime;   // d^2 x d^2 operator (P kron I) + ((I-P) kron P)
    Matrix EZ_pinv;   // pseudoinverse of EZprime, for the Lyapunov value
    double theta_qn = 0.0;
    double ep_min = 0.0;  // lambda_min(E[P]); sandwich is [ep_min, 2 ep_min]
    double nu_qn = 0.0;
    bool nu_is_fallback = false;
};

// Exact spectral constants of the inversion operator by atom enumeration.
// Materializes d^2 x d^2 matrices; d is capped at 20.
inline InversionSpectral inversion_spectral(const Matrix& a, const SketchDistribution& dist,
                                            bool nu_fallback = false) {
    check_spd(a);
    const Eigen::Index d = a.rows();
    if (d * d > 400) throw EnumerationTooLargeError("inversion spectral limited to d <= 20");
    if (!dist.discrete()) throw ExactUnavailableError("inversion spectral needs a discrete distribution");

    const Matrix ahalf = sqrt_psd(a);
    const Matrix id = Matrix::Identity(d, d);
    std::vector<Atom> atoms = enumerate_atoms(dist);

    InversionSpectral out;
    out.EP = Matrix::Zero(d, d);
    out.EZprime = Matrix::Zero(d * d, d * d);
    std::vector<Matrix> projs;
    projs.reserve(atoms.size());
    for (const Atom& atom : atoms) {
        Matrix p = projector_atom(ahalf, atom.S);  // A^{1/2} S (S^T A S)^dagger S^T A^{1/2}
        projs.push_back(p);
        if (atom.prob == 0.0) continue;
        out.EP += atom.prob * p;
        out.EZprime += atom.prob * (kron(p, id) + kron(Matrix(id - p), p));
    }
    out.EP = symmetrize(out.EP);
    out.EZprime = symmetrize(out.EZprime);
    // The inversion error obeys vec(E+) = (I - Z') vec(E) over the whole
    // space, so the relevant constant is the plain smallest eigenvalue of
    // E[Z'] (zero when the distribution does not span the space), not the
    // smallest nonzero one.
    out.theta_qn = std::max(0.0, sym_eig(out.EZprime).values(d * d - 1));
    out.ep_min = sym_eig(out.EP).values(d - 1);
    out.EZ_pinv = pinv(out.EZprime);

    const double hi = out.theta_qn > 0.0 ? 1.0 / out.theta_qn
                                         : std::numeric_limits<double>::infinity();
    if (nu_fallback) {
        out.nu_qn = hi;
        out.nu_is_fallback = true;
        return out;
    }
    // nu over the full d^2 operator Z = I kron I - (I-P) kron (I-P), which
    // coincides with Z'.
    Matrix w = Matrix::Zero(d * d, d * d);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].prob == 0.0) continue;
        Matrix ip = id - projs[i];
        Matrix z = Matrix::Identity(d * d, d * d) - kron(ip, ip);
        w += atoms[i].prob * z * out.EZ_pinv * z;
    }
    const Matrix r = sqrt_psd(symmetrize(out.EZ_pinv));
    double nu = sym_eig(symmetrize(r * symmetrize(w) * r)).values(0);
    if (nu < 1.0 - 1e-6 || nu > hi + 1e-6)
        throw SpectralDiagnosticError("inversion nu outside [1, 1/theta]");
    out.nu_qn = std::clamp(nu, 1.0, hi);
    return out;
}

struct InversionTraceRow {
    int iter = 0;
    double dist_sq = 0.0;    // || A^{1/2} (X - A^{-1}) A^{1/2} ||_F^2
    double min_eig_X = 0.0;  // diagnostic only; PD of iterates is not asserted
    double lyapunov = std::numeric_limits<double>::quiet_NaN();
};

struct InversionTrace {
    std::vector<InversionTraceRow> rows;
    std::uint64_t seed = 0;
    std::string method;
    AccelParams params;
};

struct InvertOptions {
    std::optional<Matrix> X0;  // default zero
    const InversionSpectral* spectral = nullptr;  // enables the Lyapunov column
    std::optional<std::vector<int>> forced_atoms;
    int log_every = 1;
};

namespace detail {

struct InversionRecorder {
    Matrix ahalf;
    Matrix ainv;
    const InvertOptions& opt;
    double lyap_weight;
    InversionTrace& trace;

    void record(int k, const Matrix& x, const Matrix* v) const {
        if (opt.log_every > 1 && k % opt.log_every != 0) return;
        InversionTraceRow row;
        row.iter = k;
        Matrix err_hat = ahalf * (x - ainv) * ahalf;
        row.dist_sq = err_hat.squaredNorm();
        row.min_eig_X = sym_eig(symmetrize(x)).values(x.rows() - 1);
        if (opt.spectral && v) {
            Matrix vhat = ahalf * (*v - ainv) * ahalf;
            Vector vv = vec(vhat);
            row.lyapunov = vv.dot(opt.spectral->EZ_pinv * vv) + lyap_weight * row.dist_sq;
        }
        trace.rows.push_back(row);
    }
};

}  // namespace detail

// Accelerated inversion: the hat-space momentum recursion mapped back to the
// original coordinates. Trace distance is the weighted Frobenius error.
inline InversionTrace run_accel_inverse(const Matrix& a, const SketchDistribution& dist,
                                        const AccelParams& params, int iters,
                                        std::uint64_t seed, const InvertOptions& opt = {}) {
    check_spd(a);
    if (iters < 0) throw ParamOutOfRangeError("iters must be >= 0");
    if (opt.spectral &&
        (std::abs(params.theta - opt.spectral->theta_qn) > 1e-9 ||
         std::abs(params.nu - opt.spectral->nu_qn) > 1e-9))
        throw ParamMismatchError("params theta/nu disagree with inversion spectral data");

    const Eigen::Index d = a.rows();
    detail::SketchStream stream(dist, seed, opt.forced_atoms);
    InversionTrace trace;
    trace.seed = seed;
    trace.method = "accel";
    trace.params = params;
    detail::InversionRecorder rec{sqrt_psd(a), a.llt().solve(Matrix::Identity(d, d)),
                                  opt, params.lyapunov_weight, trace};

    Matrix x = opt.X0.value_or(Matrix::Zero(d, d));
    Matrix v = x;
    rec.record(0, x, &v);
    for (int k = 0; k < iters; ++k) {
        Matrix y = params.eta * v + (1.0 - params.eta) * x;
        Matrix s = stream.next();
        Matrix g = accel_gradient(a, s, y);
        x = symmetrize(y - g);
        v = symmetrize(params.beta * v + (1.0 - params.beta) * y - params.gamma * g);
        rec.record(k + 1, x, &v);
    }
    return trace;
}

inline InversionTrace run_basic_inverse(const Matrix& a, const SketchDistribution& dist,
                                        int iters, std::uint64_t seed,
                                        const InvertOptions& opt = {}) {
    check_spd(a);
    if (iters < 0) throw ParamOutOfRangeError("iters must be >= 0");
    const Eigen::Index d = a.rows();
    detail::SketchStream stream(dist, seed, opt.forced_atoms);
    InversionTrace trace;
    trace.seed = seed;
    trace.method = "basic";
    detail::InversionRecorder rec{sqrt_psd(a), a.llt().solve(Matrix::Identity(d, d)),
                                  opt, 0.0, trace};

    Matrix x = opt.X0.value_or(Matrix::Zero(d, d));
    rec.record(0, x, nullptr);
    for (int k = 0; k < iters; ++k) {
        x = basic_inverse_step(a, stream.next(), x);
        rec.record(k + 1, x, nullptr);
    }
    return trace;
}

}  // namespace sap
