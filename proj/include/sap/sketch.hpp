#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sap/csv.hpp"
#include "sap/errors.hpp"
#include "sap/kernels.hpp"
#include "sap/rng.hpp"

namespace sap {

enum class SketchKind { SingleCoordinate, UniformBlock, Gaussian, FixedAtomList };

// A distribution over sketch matrices S with d rows. Immutable once built.
struct SketchDistribution {
    SketchKind kind;
    int dim = 0;

    Vector probs;              // SingleCoordinate
    Vector cum_probs;          // cumulative table for discrete sampling
    int block_size = 0;        // UniformBlock tau / Gaussian columns
    std::vector<Matrix> atoms; // FixedAtomList
    Vector atom_probs;

    bool discrete() const { return kind != SketchKind::Gaussian; }

    static SketchDistribution single_coordinate(const Vector& p) {
        validate_probs(p);
        SketchDistribution d;
        d.kind = SketchKind::SingleCoordinate;
        d.dim = static_cast<int>(p.size());
        d.probs = p;
        d.cum_probs = cumulative(p);
        return d;
    }

    static SketchDistribution uniform_coordinate(int dim) {
        return single_coordinate(Vector::Constant(dim, 1.0 / dim));
    }

    static SketchDistribution uniform_block(int dim, int tau) {
        if (tau < 1 || tau > dim)
            throw BadDistributionError("block size must satisfy 1 <= tau <= d");
        SketchDistribution d;
        d.kind = SketchKind::UniformBlock;
        d.dim = dim;
        d.block_size = tau;
        return d;
    }

    static SketchDistribution gaussian(int dim, int tau) {
        if (tau < 1) throw BadDistributionError("gaussian sketch needs tau >= 1");
        SketchDistribution d;
        d.kind = SketchKind::Gaussian;
        d.dim = dim;
        d.block_size = tau;
        return d;
    }

    static SketchDistribution fixed_atoms(std::vector<Matrix> atoms, const Vector& p) {
        if (atoms.empty()) throw BadDistributionError("empty atom list");
        if (static_cast<Eigen::Index>(atoms.size()) != p.size())
            throw BadDistributionError("atom/probability count mismatch");
        validate_probs(p);
        const Eigen::Index d = atoms.front().rows();
        for (const Matrix& s : atoms)
            if (s.rows() != d) throw BadDistributionError("atoms must all have d rows");
        SketchDistribution dist;
        dist.kind = SketchKind::FixedAtomList;
        dist.dim = static_cast<int>(d);
        dist.atoms = std::move(atoms);
        dist.atom_probs = p;
        dist.cum_probs = cumulative(p);
        return dist;
    }

private:
    static void validate_probs(const Vector& p) {
        if (p.size() == 0) throw BadDistributionError("empty probability vector");
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (!(p(i) >= 0.0)) throw BadDistributionError("negative probability");
        if (std::abs(p.sum() - 1.0) > 1e-12)
            throw BadDistributionError("probabilities must sum to 1");
    }
    static Vector cumulative(const Vector& p) {
        Vector c(p.size());
        double acc = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) c(i) = (acc += p(i));
        c(p.size() - 1) = 1.0;
        return c;
    }
};

struct SketchSample {
    Matrix S;
    int atom_index = -1;  // discrete kinds only
};

// SingleCoordinate with p_i = A_ii / Tr(A).
inline SketchDistribution make_diag_proportional(const Matrix& a) {
    if (!is_symmetric(a)) throw NotSymmetricError("make_diag_proportional: A not symmetric");
    Vector diag = a.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i)
        if (diag(i) <= 0.0)
            throw NonpositiveDiagonalError("make_diag_proportional: A has nonpositive diagonal");
    return SketchDistribution::single_coordinate(diag / diag.sum());
}

inline Matrix coordinate_column(int dim, int i) {
    Matrix s = Matrix::Zero(dim, 1);
    s(i, 0) = 1.0;
    return s;
}

inline Matrix column_selector(int dim, const std::vector<int>& idx) {
    Matrix s = Matrix::Zero(dim, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) s(idx[j], static_cast<Eigen::Index>(j)) = 1.0;
    return s;
}

inline int discrete_index(const Vector& cum, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    const double* begin = cum.data();
    const double* end = begin + cum.size();
    return static_cast<int>(std::upper_bound(begin, end, u) - begin);
}

inline SketchSample sample(const SketchDistribution& dist, Rng& rng) {
    switch (dist.kind) {
        case SketchKind::SingleCoordinate: {
            int i = discrete_index(dist.cum_probs, rng);
            return {coordinate_column(dist.dim, i), i};
        }
        case SketchKind::UniformBlock: {
            // Partial Fisher-Yates over [0, d), then sort the chosen subset.
            std::vector<int> pool(static_cast<std::size_t>(dist.dim));
            std::iota(pool.begin(), pool.end(), 0);
            for (int j = 0; j < dist.block_size; ++j) {
                std::uniform_int_distribution<int> pick(j, dist.dim - 1);
                std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
            }
            std::vector<int> idx(pool.begin(), pool.begin() + dist.block_size);
            std::sort(idx.begin(), idx.end());
            return {column_selector(dist.dim, idx), -1};
        }
        case SketchKind::Gaussian: {
            std::normal_distribution<double> normal(0.0, 1.0);
            Matrix s(dist.dim, dist.block_size);
            for (Eigen::Index i = 0; i < s.rows(); ++i)
                for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = normal(rng);
            return {s, -1};
        }
        case SketchKind::FixedAtomList: {
            int i = discrete_index(dist.cum_probs, rng);
            return {dist.atoms[static_cast<std::size_t>(i)], i};
        }
    }
    throw BadDistributionError("unknown sketch kind");
}

struct Atom {
    Matrix S;
    double prob;
};

inline std::int64_t binomial_count(int n, int k) {
    std::int64_t c = 1;
    k = std::min(k, n - k);
    for (int i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > (1 << 30)) return c;  // caller checks the budget anyway
    }
    return c;
}

// Full atom list of a discrete distribution. UniformBlock enumerates all
// C(d, tau) subsets, capped at 10^6.
inline std::vector<Atom> enumerate_atoms(const SketchDistribution& dist,
                                         std::int64_t max_atoms = 1000000) {
    std::vector<Atom> out;
    switch (dist.kind) {
        case SketchKind::SingleCoordinate:
            for (int i = 0; i < dist.dim; ++i)
                out.push_back({coordinate_column(dist.dim, i), dist.probs(i)});
            return out;
        case SketchKind::UniformBlock: {
            const std::int64_t count = binomial_count(dist.dim, dist.block_size);
            if (count > max_atoms)
                throw EnumerationTooLargeError("C(d, tau) exceeds enumeration budget");
            const double p = 1.0 / static_cast<double>(count);
            std::vector<int> idx(static_cast<std::size_t>(dist.block_size));
            std::iota(idx.begin(), idx.end(), 0);
            while (true) {
                out.push_back({column_selector(dist.dim, idx), p});
                // next lexicographic combination
                int j = dist.block_size - 1;
                while (j >= 0 && idx[static_cast<std::size_t>(j)] == dist.dim - dist.block_size + j) --j;
                if (j < 0) break;
                ++idx[static_cast<std::size_t>(j)];
                for (int t = j + 1; t < dist.block_size; ++t)
                    idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
            }
            return out;
        }
        case SketchKind::FixedAtomList:
            for (std::size_t i = 0; i < dist.atoms.size(); ++i)
                out.push_back({dist.atoms[i], dist.atom_probs(static_cast<Eigen::Index>(i))});
            return out;
        case SketchKind::Gaussian:
            throw ExactUnavailableError("gaussian sketches cannot be enumerated");
    }
    throw BadDistributionError("unknown sketch kind");
}

// Pseudoinverse of the sketched Gram matrix (S^T A S)^dagger; downstream
// composes T = S * core * S^T.
inline Matrix step_core(const Matrix& a, const Matrix& s) {
    return pinv(Matrix(s.transpose() * a * s));
}

// CLI mini-grammar:
//   coord:uniform | coord:diag | coord:custom:<probs.csv>
//   block:uniform:<tau> | gauss:<tau> | atoms:<dir>
// `coord:diag` needs the system matrix to read the diagonal from.
inline SketchDistribution parse_dist(const std::string& spec, int dim,
                                     const Matrix* a = nullptr) {
    auto starts_with = [&](const std::string& prefix) {
        return spec.rfind(prefix, 0) == 0;
    };
    if (spec == "coord:uniform") return SketchDistribution::uniform_coordinate(dim);
    if (spec == "coord:diag") {
        if (!a) throw BadDistributionError("coord:diag requires the system matrix");
        return make_diag_proportional(*a);
    }
    if (starts_with("coord:custom:"))
        return SketchDistribution::single_coordinate(read_vector_csv(spec.substr(13)));
    if (starts_with("block:uniform:"))
        return SketchDistribution::uniform_block(dim, std::stoi(spec.substr(14)));
    if (starts_with("gauss:"))
        return SketchDistribution::gaussian(dim, std::stoi(spec.substr(6)));
    if (starts_with("atoms:")) {
        const std::filesystem::path dir(spec.substr(6));
        Vector p = read_vector_csv((dir / "probs.csv").string());
        std::vector<std::string> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name != "probs.csv" && entry.path().extension() == ".csv")
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        std::vector<Matrix> atoms;
        for (const std::string& f : files) atoms.push_back(read_matrix_csv(f));
        return SketchDistribution::fixed_atoms(std::move(atoms), p);
    }
    throw BadDistributionError("unrecognized distribution spec: " + spec);
}

}  // namespace sap
