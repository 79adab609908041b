#include <doctest.h>

#include <Eigen/Dense>

#include "sap/kernels.hpp"
#include "test_util.hpp"

using sap::Matrix;
using sap::Vector;
using test_util::max_abs;

TEST_CASE("pinv: zero matrix maps to zero matrix") {
    Matrix z = Matrix::Zero(3, 2);
    Matrix p = sap::pinv(z);
    CHECK(p.rows() == 2);
    CHECK(p.cols() == 3);
    CHECK(max_abs(p) == 0.0);
}

TEST_CASE("pinv: diagonal inverts nonzero entries only") {
    Matrix m = Vector{{2.0, 0.0}}.asDiagonal();
    Matrix p = sap::pinv(m);
    CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("pinv: rank-1 all-ones matrix") {
    // Independent oracle: M = sigma u v^T with u = v = (1,1)/sqrt(2),
    // sigma = 2, so M^+ = v u^T / sigma has every entry 0.25.
    Matrix m = Matrix::Ones(2, 2);
    Vector u = Vector::Ones(2) / std::sqrt(2.0);
    Matrix oracle = (u * u.transpose()) / 2.0;
    CHECK(max_abs(sap::pinv(m) - oracle) < 1e-12);
    CHECK(oracle(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("pinv: Moore-Penrose conditions on random matrices") {
    sap::Rng rng = sap::make_rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int> dim(1, 12);
        const int r = dim(rng), c = dim(rng);
        std::uniform_int_distribution<int> rk(1, std::min(r, c));
        Matrix m = trial % 2 == 0 ? test_util::random_matrix(r, c, rng)
                                  : test_util::random_rank_deficient(r, c, rk(rng), rng);
        Matrix p = sap::pinv(m);
        const double nm = std::max(1e-30, m.norm());
        const double np = std::max(1e-30, p.norm());
        CHECK((m * p * m - m).norm() <= 1e-9 * nm);
        CHECK((p * m * p - p).norm() <= 1e-9 * np);
        CHECK(max_abs(Matrix(m * p) - Matrix((m * p).transpose())) <= 1e-9 * nm * np);
        CHECK(max_abs(Matrix(p * m) - Matrix((p * m).transpose())) <= 1e-9 * nm * np);
        // transpose and Gram identities
        CHECK((sap::pinv(Matrix(m.transpose())) - p.transpose()).norm() <= 1e-9 * np);
        CHECK((m.transpose() * sap::pinv(Matrix(m * m.transpose())) - p).norm() <= 1e-8 * np);
    }
}

TEST_CASE("pinv of a consistent system is the minimum-norm solution") {
    sap::Rng rng = sap::make_rng(102);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = test_util::random_rank_deficient(4, 6, 2, rng);
        Vector d = m * test_util::random_vector(6, rng);  // consistent by construction
        Vector x = sap::pinv(m) * d;
        CHECK((m * x - d).norm() <= 1e-9 * std::max(1.0, d.norm()));
        // null-space perturbations can only increase the norm
        Eigen::FullPivLU<Matrix> lu(m);
        Matrix null_basis = lu.kernel();
        for (int j = 0; j < null_basis.cols(); ++j) {
            for (double scale : {-2.0, -0.5, 0.5, 2.0}) {
                Vector perturbed = x + scale * null_basis.col(j);
                CHECK(perturbed.norm() >= x.norm() - 1e-10);
            }
        }
    }
}

TEST_CASE("range and null projectors decompose the identity") {
    sap::Rng rng = sap::make_rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = trial % 2 == 0 ? test_util::random_matrix(5, 7, rng)
                                  : test_util::random_rank_deficient(5, 7, 3, rng);
        Matrix row_space = sap::range_projector(Matrix(m.transpose()));
        Eigen::FullPivLU<Matrix> lu(m);
        lu.setThreshold(1e-10);
        Matrix null_space = sap::range_projector(lu.kernel());
        CHECK(max_abs(row_space + null_space - Matrix::Identity(7, 7)) <= 1e-9);
    }
}

TEST_CASE("projector trace equals numeric rank") {
    sap::Rng rng = sap::make_rng(104);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> dim(1, 10);
        const int r = dim(rng), c = dim(rng);
        std::uniform_int_distribution<int> rk(1, std::min(r, c));
        Matrix m = test_util::random_rank_deficient(r, c, rk(rng), rng);
        Matrix proj = sap::range_projector(m);
        CHECK(proj.trace() ==
              doctest::Approx(static_cast<double>(sap::numeric_rank(m))).epsilon(1e-8));
        CHECK(proj.trace() ==
              doctest::Approx(static_cast<double>(sap::numeric_rank(proj))).epsilon(1e-8));
        CHECK(max_abs(Matrix(proj * m) - m) <= 1e-9 * std::max(1.0, max_abs(m)));
    }
}

TEST_CASE("range_projector examples") {
    CHECK(max_abs(sap::range_projector(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) < 1e-12);
    Matrix col(2, 1);
    col << 1, 0;
    Matrix axis = sap::range_projector(col);
    CHECK(max_abs(axis - Matrix(Vector{{1.0, 0.0}}.asDiagonal())) < 1e-12);
    Matrix m(2, 2);
    m << 1, 2, 2, 4;
    CHECK(max_abs(sap::range_projector(m) - m / 5.0) < 1e-12);
}

TEST_CASE("sqrt_psd examples") {
    CHECK(max_abs(sap::sqrt_psd(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)) < 1e-12);
    Matrix d = Vector{{4.0, 9.0}}.asDiagonal();
    CHECK(max_abs(sap::sqrt_psd(d) - Matrix(Vector{{2.0, 3.0}}.asDiagonal())) < 1e-12);
    Matrix g(2, 2);
    g << 2, 1, 1, 2;
    // eigenvalues {3, 1}: R = ((sqrt(3)+1)/2, (sqrt(3)-1)/2; ...)
    Matrix r = sap::sqrt_psd(g);
    CHECK(r(0, 0) == doctest::Approx(1.36603).epsilon(1e-5));
    CHECK(r(0, 1) == doctest::Approx(0.36603).epsilon(1e-5));
    CHECK(max_abs(r - r.transpose()) < 1e-12);
    CHECK(max_abs(r * r - g) < 1e-9);
}

TEST_CASE("sqrt_psd properties and idempotent reconstruction") {
    sap::Rng rng = sap::make_rng(105);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> dim(1, 9);
        const int d = dim(rng);
        Matrix g = trial % 2 == 0 ? test_util::random_spd(d, rng)
                                  : test_util::random_psd_rank(d, std::max(1, d / 2), rng);
        Matrix r = sap::sqrt_psd(g);
        CHECK(max_abs(r - r.transpose()) <= 1e-10 * std::max(1.0, max_abs(r)));
        CHECK((r * r - g).norm() <= 1e-9 * std::max(1.0, g.norm()));
        Matrix again = sap::sqrt_psd(Matrix(r * r));
        CHECK(max_abs(again - r) <= 1e-8 * std::max(1.0, max_abs(r)));
    }
}

TEST_CASE("sqrt_psd rejects bad inputs") {
    Matrix asym(2, 2);
    asym << 1, 2, 0, 1;
    CHECK_THROWS_AS(sap::sqrt_psd(asym), sap::NotSymmetricError);
    Matrix indef = Vector{{1.0, -1.0}}.asDiagonal();
    CHECK_THROWS_AS(sap::sqrt_psd(indef), sap::NotPSDError);
}

TEST_CASE("sym_eig: descending values, orthonormal vectors, reconstruction") {
    sap::Rng rng = sap::make_rng(106);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix g = test_util::random_spd(6, rng);
        sap::EigenDecomposition e = sap::sym_eig(g);
        for (int i = 0; i + 1 < 6; ++i) CHECK(e.values(i) >= e.values(i + 1));
        CHECK(max_abs(Matrix(e.vectors.transpose() * e.vectors) - Matrix::Identity(6, 6)) <=
              1e-10);
        Matrix rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rebuilt - g).norm() <= 1e-9 * g.norm());
    }
}

TEST_CASE("kron examples") {
    Matrix i2 = Matrix::Identity(2, 2);
    CHECK(max_abs(sap::kron(i2, i2) - Matrix::Identity(4, 4)) == 0.0);
    Matrix d = Vector{{1.0, 0.0}}.asDiagonal();
    Matrix expect = Vector{{1.0, 1.0, 0.0, 0.0}}.asDiagonal();
    CHECK(max_abs(sap::kron(d, i2) - expect) == 0.0);
}

TEST_CASE("kron respects the column-wise vec convention") {
    // vec((I-P) X (I-P)) = ((I-P) kron (I-P)) vec(X) for P = diag(1,0)
    Matrix p = Vector{{1.0, 0.0}}.asDiagonal();
    Matrix ip = Matrix::Identity(2, 2) - p;
    Matrix x(2, 2);
    x << 1, 2, 3, 4;
    Vector lhs = sap::vec(Matrix(ip * x * ip));
    Vector rhs = sap::kron(ip, ip) * sap::vec(x);
    Vector expect(4);
    expect << 0, 0, 0, 4;
    CHECK(max_abs(Matrix(lhs - expect)) == 0.0);
    CHECK(max_abs(Matrix(lhs - rhs)) == 0.0);

    sap::Rng rng = sap::make_rng(107);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix a = test_util::random_matrix(3, 3, rng);
        Matrix b = test_util::random_matrix(3, 3, rng);
        Matrix xx = test_util::random_matrix(3, 3, rng);
        Vector v1 = sap::vec(Matrix(a * xx * b));
        Vector v2 = sap::kron(Matrix(b.transpose()), a) * sap::vec(xx);
        CHECK((v1 - v2).norm() <= 1e-12 * std::max(1.0, v1.norm()));
    }
}
