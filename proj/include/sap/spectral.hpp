#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "sap/errors.hpp"
#include "sap/kernels.hpp"
#include "sap/rng.hpp"
#include "sap/sketch.hpp"

namespace sap {

// The stochastic projector of one sketch, in the coordinates where the
// working norm is Euclidean: Z_S is the orthogonal projector onto
// Range(M^T S), where M is the (whitened) system matrix. With M = A^{1/2}
// this is the B = A projector A^{1/2} S (S^T A S)^dagger S^T A^{1/2}.
inline Matrix projector_atom(const Matrix& m, const Matrix& s) {
    return range_projector(Matrix(m.transpose() * s));
}

enum class EstimationMode { Exact, MonteCarlo };

struct SpectralSummary {
    Matrix EZ;
    Matrix EZ_pinv;
    double theta = 0.0;
    double nu = 0.0;
    int range_dim = 0;
    bool exactness_ok = false;
    EstimationMode estimation = EstimationMode::Exact;
    int mc_samples = 0;
    bool nu_is_fallback = false;  // nu = 1/theta upper bound used
};

// Smallest eigenvalue of E[Z] above the rank cutoff; equals 1/||E[Z]^dagger||.
inline double theta_of(const Matrix& ez) {
    EigenDecomposition d = sym_eig(ez);
    const double lmax = d.values.size() > 0 ? d.values.cwiseAbs().maxCoeff() : 0.0;
    const double cutoff = rank_cutoff(lmax, ez.rows(), ez.cols());
    double theta = 0.0;
    bool found = false;
    for (Eigen::Index i = 0; i < d.values.size(); ++i) {
        if (d.values(i) > cutoff) {
            theta = d.values(i);  // descending order: last one above cutoff wins
            found = true;
        }
    }
    if (!found) throw ZeroOperatorError("theta_of: E[Z] is numerically zero");
    return theta;
}

// E[Z] for the whitened system matrix M, either by exact atom enumeration
// or as a symmetrized Monte-Carlo mean.
inline Matrix expected_projector_system(const Matrix& m, const SketchDistribution& dist,
                                        EstimationMode mode, int mc_samples = 0,
                                        std::uint64_t seed = 0) {
    const Eigen::Index d = m.cols();
    Matrix ez = Matrix::Zero(d, d);
    if (mode == EstimationMode::Exact) {
        if (!dist.discrete())
            throw ExactUnavailableError("exact E[Z] needs a discrete distribution");
        for (const Atom& atom : enumerate_atoms(dist)) {
            if (atom.prob == 0.0) continue;
            ez += atom.prob * projector_atom(m, atom.S);
        }
    } else {
        if (mc_samples <= 0) throw ParamOutOfRangeError("Monte Carlo needs n > 0");
        Rng rng = make_rng(seed);
        for (int i = 0; i < mc_samples; ++i)
            ez += projector_atom(m, sample(dist, rng).S);
        ez /= static_cast<double>(mc_samples);
    }
    return symmetrize(ez);
}

// Spec entry point: A symmetric PSD, B = A projectors (whitened via A^{1/2}).
inline Matrix expected_projector(const Matrix& a, const SketchDistribution& dist,
                                 EstimationMode mode, int mc_samples = 0,
                                 std::uint64_t seed = 0) {
    return expected_projector_system(sqrt_psd(a), dist, mode, mc_samples, seed);
}

// Exact nu: largest generalized eigenvalue of (E[Z EZ^dagger Z], E[Z])
// restricted to Range(E[Z]). Values drifting outside [1, 1/theta] by more
// than 1e-6 indicate a broken enumeration and raise instead of clamping.
inline double nu_of_system(const Matrix& m, const SketchDistribution& dist,
                           const Matrix& ez, const Matrix& ez_pinv, double theta) {
    if (!dist.discrete())
        throw ExactUnavailableError("exact nu needs a discrete distribution");
    const Eigen::Index d = ez.rows();
    Matrix w = Matrix::Zero(d, d);
    for (const Atom& atom : enumerate_atoms(dist)) {
        if (atom.prob == 0.0) continue;
        Matrix z = projector_atom(m, atom.S);
        w += atom.prob * z * ez_pinv * z;
    }
    const Matrix r = sqrt_psd(symmetrize(ez_pinv));
    // Components outside Range(E[Z]) map to 0 under r, so the max eigenvalue
    // is automatically the restricted supremum (nu >= 1).
    EigenDecomposition dd = sym_eig(symmetrize(r * symmetrize(w) * r));
    double nu = dd.values(0);
    const double hi = 1.0 / theta;
    if (nu < 1.0 - 1e-6 || nu > hi + 1e-6)
        throw SpectralDiagnosticError("nu = " + std::to_string(nu) +
                                      " outside [1, 1/theta]; enumeration or exactness broken");
    return std::clamp(nu, 1.0, hi);
}

struct SummaryOptions {
    EstimationMode mode = EstimationMode::Exact;
    int mc_samples = 50000;
    std::uint64_t mc_seed = 0;
    bool nu_fallback = false;  // force nu = 1/theta even when exact is possible
};

// Full spectral summary of the whitened system M under a sketch distribution.
inline SpectralSummary spectral_summary_system(const Matrix& m, const SketchDistribution& dist,
                                               const SummaryOptions& opt = {}) {
    SpectralSummary s;
    s.estimation = opt.mode;
    s.mc_samples = opt.mode == EstimationMode::MonteCarlo ? opt.mc_samples : 0;
    s.EZ = expected_projector_system(m, dist, opt.mode, opt.mc_samples, opt.mc_seed);
    s.EZ_pinv = pinv(s.EZ);
    s.theta = theta_of(s.EZ);
    s.range_dim = static_cast<int>(numeric_rank(s.EZ));
    s.exactness_ok = s.range_dim == static_cast<int>(numeric_rank(m));
    if (dist.discrete() && !opt.nu_fallback && opt.mode == EstimationMode::Exact) {
        s.nu = nu_of_system(m, dist, s.EZ, s.EZ_pinv, s.theta);
    } else {
        s.nu = 1.0 / s.theta;
        s.nu_is_fallback = true;
    }
    return s;
}

inline SpectralSummary spectral_summary(const Matrix& a, const SketchDistribution& dist,
                                        const SummaryOptions& opt = {}) {
    return spectral_summary_system(sqrt_psd(a), dist, opt);
}

// Spec-shaped wrapper: nu for a summary whose E[Z] is already computed.
inline double nu_of(const Matrix& a, const SketchDistribution& dist,
                    const Matrix& ez, const Matrix& ez_pinv, double theta) {
    return nu_of_system(sqrt_psd(a), dist, ez, ez_pinv, theta);
}

enum class Variant { Default, Omega, Family };

struct AccelParams {
    double beta = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double theta = 0.0;
    double nu = 0.0;
    Variant variant = Variant::Default;
    double omega = 1.0;  // Omega variant input
    double alpha = 1.0;  // 2*omega - omega^2
    double s = 1.0;      // Family variant input
    double rate = 0.0;   // predicted contraction of the Lyapunov mean
    double lyapunov_weight = 0.0;  // coefficient of ||x - x*||^2 in Psi
};

inline void check_theta_nu(double theta, double nu) {
    if (!(theta > 0.0 && theta <= 1.0 + 1e-12))
        throw ParamOutOfRangeError("theta must lie in (0, 1]");
    if (!(nu >= 1.0 - 1e-9 && nu <= 1.0 / theta + 1e-6))
        throw ParamOutOfRangeError("nu must lie in [1, 1/theta]");
}

// beta = 1 - sqrt(theta/nu), gamma = sqrt(1/(theta nu)), eta = 1/(1 + gamma nu).
inline AccelParams default_params(double theta, double nu) {
    check_theta_nu(theta, nu);
    AccelParams p;
    p.theta = theta;
    p.nu = nu;
    p.variant = Variant::Default;
    p.beta = 1.0 - std::sqrt(theta / nu);
    p.gamma = std::sqrt(1.0 / (theta * nu));
    p.eta = 1.0 / (1.0 + p.gamma * nu);
    p.rate = 1.0 - std::sqrt(theta / nu);
    p.lyapunov_weight = 1.0 / theta;  // = gamma^2 * nu
    return p;
}

inline AccelParams omega_params(double theta, double nu, double omega) {
    check_theta_nu(theta, nu);
    if (!(omega > 0.0 && omega < 2.0))
        throw ParamOutOfRangeError("omega must lie in (0, 2)");
    AccelParams p;
    p.theta = theta;
    p.nu = nu;
    p.variant = Variant::Omega;
    p.omega = omega;
    p.alpha = 2.0 * omega - omega * omega;
    p.beta = 1.0 - std::sqrt(theta * p.alpha / nu);
    p.gamma = std::sqrt(p.alpha / (theta * nu));
    p.eta = 1.0 / (1.0 + p.gamma * nu);
    p.rate = 1.0 - std::sqrt(theta * p.alpha / nu);
    p.lyapunov_weight = 1.0 / theta;  // = gamma^2 nu / alpha
    return p;
}

// One-parameter family: s is the primary knob, eta is derived so that
// rho = max{beta, s*beta} holds literally.
inline AccelParams family_params(double theta, double nu, double s) {
    check_theta_nu(theta, nu);
    if (!(s > 0.0)) throw ParamOutOfRangeError("s must be positive");
    AccelParams p;
    p.theta = theta;
    p.nu = nu;
    p.variant = Variant::Family;
    p.s = s;
    // s*sqrt((nu + 4 theta s - 2 nu s + nu s^2)/(nu s^2)) computed without the
    // s^2 round trip, which matters for tiny s.
    const double root = std::sqrt((nu + 4.0 * theta * s - 2.0 * nu * s + nu * s * s) / nu);
    p.beta = (1.0 + s - root) / (2.0 * s);
    p.gamma = 1.0 / ((1.0 - s * p.beta) * nu);
    // tau = (1-eta)/eta = s*gamma*nu, which makes rho = max{beta, s*beta}
    // exact and recovers the default parameters at s = 1.
    p.eta = 1.0 / (1.0 + s * p.gamma * nu);
    p.rate = std::max(p.beta, s * p.beta);
    p.lyapunov_weight = s * p.gamma * p.gamma * nu;  // = gamma * tau
    return p;
}

}  // namespace sap
