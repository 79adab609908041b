#pragma once

#include <vector>

#include "sap/kernels.hpp"
#include "sap/rng.hpp"
#include "sap/sketch.hpp"

namespace test_util {

using sap::Matrix;
using sap::Rng;
using sap::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

inline Vector random_vector(Eigen::Index n, Rng& rng) {
    return random_matrix(n, 1, rng).col(0);
}

inline Matrix random_rank_deficient(Eigen::Index rows, Eigen::Index cols,
                                    Eigen::Index rank, Rng& rng) {
    return random_matrix(rows, rank, rng) * random_matrix(rank, cols, rng);
}

inline Matrix random_spd(Eigen::Index d, Rng& rng, double ridge = 0.1) {
    Matrix m = random_matrix(d, d, rng);
    return sap::symmetrize(m * m.transpose() + ridge * Matrix::Identity(d, d));
}

inline Matrix random_psd_rank(Eigen::Index d, Eigen::Index rank, Rng& rng) {
    Matrix m = random_matrix(d, rank, rng);
    return sap::symmetrize(m * m.transpose());
}

inline Vector random_probs(Eigen::Index n, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = unif(rng);
    return p / p.sum();
}

// A random discrete sketch distribution of one of the three enumerable kinds.
inline sap::SketchDistribution random_discrete_dist(int d, Rng& rng) {
    std::uniform_int_distribution<int> kind(0, 2);
    switch (kind(rng)) {
        case 0:
            return sap::SketchDistribution::single_coordinate(random_probs(d, rng));
        case 1: {
            std::uniform_int_distribution<int> tau(1, d);
            return sap::SketchDistribution::uniform_block(d, tau(rng));
        }
        default: {
            std::uniform_int_distribution<int> count(2, 4);
            std::uniform_int_distribution<int> tau(1, d);
            const int n = count(rng);
            std::vector<Matrix> atoms;
            for (int i = 0; i < n; ++i) atoms.push_back(random_matrix(d, tau(rng), rng));
            return sap::SketchDistribution::fixed_atoms(std::move(atoms), random_probs(n, rng));
        }
    }
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace test_util
