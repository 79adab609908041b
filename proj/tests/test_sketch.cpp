#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sap/csv.hpp"
#include "sap/sketch.hpp"
#include "sap/spectral.hpp"
#include "test_util.hpp"

using sap::Matrix;
using sap::Vector;
using test_util::max_abs;

TEST_CASE("make_diag_proportional") {
    Matrix i3 = Matrix::Identity(3, 3);
    sap::SketchDistribution d = sap::make_diag_proportional(i3);
    CHECK(max_abs(Matrix(d.probs - Vector::Constant(3, 1.0 / 3.0))) < 1e-15);

    Matrix a = Vector{{2.0, 1.0}}.asDiagonal();
    d = sap::make_diag_proportional(a);
    CHECK(d.probs(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(d.probs(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    Matrix a4 = Vector{{1.0, 1.0, 2.0, 4.0}}.asDiagonal();
    d = sap::make_diag_proportional(a4);
    Vector expect(4);
    expect << 0.125, 0.125, 0.25, 0.5;
    CHECK(max_abs(Matrix(d.probs - expect)) < 1e-15);

    Matrix bad = Vector{{1.0, 0.0}}.asDiagonal();
    CHECK_THROWS_AS(sap::make_diag_proportional(bad), sap::NonpositiveDiagonalError);
}

TEST_CASE("sample: degenerate distributions are deterministic") {
    Vector p(2);
    p << 1.0, 0.0;
    sap::SketchDistribution dist = sap::SketchDistribution::single_coordinate(p);
    sap::Rng rng = sap::make_rng(1);
    for (int i = 0; i < 50; ++i) {
        sap::SketchSample s = sap::sample(dist, rng);
        CHECK(s.atom_index == 0);
        CHECK(s.S(0, 0) == 1.0);
        CHECK(s.S(1, 0) == 0.0);
    }

    sap::SketchDistribution single = sap::SketchDistribution::fixed_atoms(
        {Matrix::Identity(3, 3)}, Vector::Constant(1, 1.0));
    for (int i = 0; i < 20; ++i)
        CHECK(max_abs(sap::sample(single, rng).S - Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("sample: empirical frequency matches the law") {
    Vector p(2);
    p << 2.0 / 3.0, 1.0 / 3.0;
    sap::SketchDistribution dist = sap::SketchDistribution::single_coordinate(p);
    sap::Rng rng = sap::make_rng(42);
    int hits = 0;
    const int n = 30000;
    for (int i = 0; i < n; ++i)
        if (sap::sample(dist, rng).atom_index == 0) ++hits;
    const double freq = static_cast<double>(hits) / n;
    CHECK(freq >= 0.655);  // binomial 99.9% interval around 2/3
    CHECK(freq <= 0.678);
}

TEST_CASE("sampling is reproducible from the seed") {
    sap::Rng helper = sap::make_rng(7);
    sap::SketchDistribution dist =
        sap::SketchDistribution::single_coordinate(test_util::random_probs(6, helper));
    sap::Rng a = sap::make_rng(123);
    sap::Rng b = sap::make_rng(123);
    for (int i = 0; i < 200; ++i)
        CHECK(sap::sample(dist, a).atom_index == sap::sample(dist, b).atom_index);
}

TEST_CASE("step_core examples") {
    Matrix i2 = Matrix::Identity(2, 2);
    Matrix e1 = sap::coordinate_column(2, 0);
    CHECK(sap::step_core(i2, e1)(0, 0) == doctest::Approx(1.0));
    Matrix a = Vector{{2.0, 1.0}}.asDiagonal();
    CHECK(sap::step_core(a, e1)(0, 0) == doctest::Approx(0.5));
    Matrix core = sap::step_core(a, i2);
    CHECK(max_abs(core - Matrix(Vector{{0.5, 1.0}}.asDiagonal())) < 1e-12);
}

TEST_CASE("T A T = T and the hat-space projector is an orthogonal projector") {
    sap::Rng rng = sap::make_rng(8);
    for (int trial = 0; trial < 25; ++trial) {
        std::uniform_int_distribution<int> dim(2, 8);
        const int d = dim(rng);
        Matrix a = test_util::random_spd(d, rng);
        std::uniform_int_distribution<int> tau(1, d);
        Matrix s = test_util::random_matrix(d, tau(rng), rng);
        Matrix t = s * sap::step_core(a, s) * s.transpose();
        CHECK((t * a * t - t).norm() <= 1e-9 * std::max(1.0, t.norm()));
        Matrix ahalf = sap::sqrt_psd(a);
        Matrix p = ahalf * t * ahalf;
        CHECK((p * p - p).norm() <= 1e-9 * std::max(1.0, p.norm()));
        CHECK(max_abs(p - p.transpose()) <= 1e-9 * std::max(1.0, max_abs(p)));
    }
}

TEST_CASE("atom enumeration is exhaustive and normalized") {
    sap::Rng rng = sap::make_rng(9);
    for (int trial = 0; trial < 15; ++trial) {
        sap::SketchDistribution dist = test_util::random_discrete_dist(5, rng);
        double total = 0.0;
        for (const sap::Atom& atom : sap::enumerate_atoms(dist)) total += atom.prob;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    sap::SketchDistribution block = sap::SketchDistribution::uniform_block(6, 3);
    CHECK(sap::enumerate_atoms(block).size() == 20);  // C(6,3)
    CHECK_THROWS_AS(sap::enumerate_atoms(sap::SketchDistribution::gaussian(4, 2)),
                    sap::ExactUnavailableError);
}

TEST_CASE("distribution validation") {
    Vector bad(2);
    bad << 0.6, 0.6;
    CHECK_THROWS_AS(sap::SketchDistribution::single_coordinate(bad), sap::BadDistributionError);
    bad << -0.5, 1.5;
    CHECK_THROWS_AS(sap::SketchDistribution::single_coordinate(bad), sap::BadDistributionError);
    CHECK_THROWS_AS(sap::SketchDistribution::uniform_block(3, 4), sap::BadDistributionError);
    CHECK_THROWS_AS(sap::SketchDistribution::uniform_block(3, 0), sap::BadDistributionError);
}

TEST_CASE("distribution spec grammar") {
    Matrix a = Vector{{2.0, 1.0}}.asDiagonal();
    CHECK(sap::parse_dist("coord:uniform", 2).kind == sap::SketchKind::SingleCoordinate);
    CHECK(sap::parse_dist("coord:diag", 2, &a).probs(0) == doctest::Approx(2.0 / 3.0));
    sap::SketchDistribution block = sap::parse_dist("block:uniform:2", 4);
    CHECK(block.kind == sap::SketchKind::UniformBlock);
    CHECK(block.block_size == 2);
    sap::SketchDistribution gauss = sap::parse_dist("gauss:3", 5);
    CHECK(gauss.kind == sap::SketchKind::Gaussian);
    CHECK_FALSE(gauss.discrete());
    CHECK_THROWS_AS(sap::parse_dist("nope:1", 3), sap::BadDistributionError);
    CHECK_THROWS_AS(sap::parse_dist("coord:diag", 2), sap::BadDistributionError);
}

TEST_CASE("atom directory loading") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "sap_atoms_test";
    fs::create_directories(dir);
    sap::write_matrix_csv((dir / "a0.csv").string(), Matrix::Identity(2, 2));
    sap::write_matrix_csv((dir / "a1.csv").string(), sap::coordinate_column(2, 1));
    Matrix probs(2, 1);
    probs << 0.25, 0.75;
    sap::write_matrix_csv((dir / "probs.csv").string(), probs);

    sap::SketchDistribution dist = sap::parse_dist("atoms:" + dir.string(), 2);
    CHECK(dist.kind == sap::SketchKind::FixedAtomList);
    CHECK(dist.atoms.size() == 2);
    CHECK(dist.atom_probs(1) == doctest::Approx(0.75));
    CHECK(dist.atoms[0].cols() == 2);  // a0.csv sorts first
    fs::remove_all(dir);
}
