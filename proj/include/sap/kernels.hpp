#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sap/errors.hpp"

namespace sap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// Relative cutoff below which singular values / eigenvalues count as zero.
inline double rank_cutoff(double largest, Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) * kEps * largest;
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Matrix& m, double tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
struct EigenDecomposition {
    Vector values;   // descending
    Matrix vectors;  // orthonormal columns, aligned with values
};

inline EigenDecomposition sym_eig(const Matrix& g) {
    if (!is_symmetric(g)) throw NotSymmetricError("sym_eig: input not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(g));
    if (es.info() != Eigen::Success) throw Error("sym_eig: eigensolver failed");
    EigenDecomposition d;
    d.values = es.eigenvalues().reverse();
    d.vectors = es.eigenvectors().rowwise().reverse();
    return d;
}

// Moore-Penrose pseudoinverse via SVD. Singular values below
// cutoff_scale * sigma_max are treated as zero; cutoff_scale defaults to
// max(rows, cols) * machine epsilon.
inline Matrix pinv(const Matrix& m, double cutoff_scale = -1.0) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (cutoff_scale < 0.0)
        cutoff_scale = static_cast<double>(std::max(m.rows(), m.cols())) * kEps;
    const double cutoff = cutoff_scale * smax;
    Vector inv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Eigen::Index numeric_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cutoff = rank_cutoff(sv(0), m.rows(), m.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++r;
    return r;
}

// Unique symmetric PSD square root. Eigenvalues within tolerance below zero
// are clamped; anything more negative is rejected.
inline Matrix sqrt_psd(const Matrix& g) {
    if (!is_symmetric(g)) throw NotSymmetricError("sqrt_psd: input not symmetric");
    EigenDecomposition d = sym_eig(g);
    const double scale = d.values.size() > 0 ? d.values.cwiseAbs().maxCoeff() : 0.0;
    Vector roots = Vector::Zero(d.values.size());
    for (Eigen::Index i = 0; i < d.values.size(); ++i) {
        double lam = d.values(i);
        if (lam < -1e-8 * std::max(scale, 1.0))
            throw NotPSDError("sqrt_psd: eigenvalue " + std::to_string(lam) + " below PSD tolerance");
        roots(i) = lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    return symmetrize(d.vectors * roots.asDiagonal() * d.vectors.transpose());
}

// Orthogonal projector onto Range(M), computed as M * pinv(M).
inline Matrix range_projector(const Matrix& m) {
    return symmetrize(m * pinv(m));
}

// Standard Kronecker product; consistent with the column-wise vectorization
// convention vec(A X B) = (B^T kron A) vec(X).
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Column-wise vectorization and its inverse.
inline Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace sap
