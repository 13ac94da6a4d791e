#include <doctest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "sadis/error.hpp"
#include "sadis/regwct.hpp"

using namespace sadis;

namespace {

bool bitwise_equal(const LatentTensor& a, const LatentTensor& b)
{
    return a.same_shape(b) &&
           std::memcmp(a.flat().data(), b.flat().data(), static_cast<std::size_t>(a.flat().size()) * sizeof(double)) == 0;
}

// Latent with orthogonal zero-mean rows, so its centered gram is diagonal.
LatentTensor diagonal_gram_latent(double row0_norm_sq, double row1_norm_sq)
{
    Matrix flat(2, 4);
    flat.row(0) << 1, 1, -1, -1;
    flat.row(1) << 1, -1, 1, -1;
    flat.row(0) *= std::sqrt(row0_norm_sq / 4.0);
    flat.row(1) *= std::sqrt(row1_norm_sq / 4.0);
    return LatentTensor(flat, 2, 2);
}

RegWctConfig no_noise()
{
    RegWctConfig cfg;
    cfg.lambda = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("channel_moments")
{
    SUBCASE("constant latent")
    {
        Matrix flat(2, 6);
        flat.row(0).setConstant(3.0);
        flat.row(1).setConstant(-1.5);
        const auto m = channel_moments(LatentTensor(flat, 2, 3));
        CHECK(m.mean[0] == 3.0);
        CHECK(m.mean[1] == -1.5);
        CHECK(m.gram.isZero(0.0));
    }
    SUBCASE("two samples of one channel")
    {
        Matrix flat(1, 2);
        flat << -1.0, 1.0;
        const auto m = channel_moments(LatentTensor(flat, 1, 2));
        CHECK(m.mean[0] == 0.0);
        CHECK(m.gram(0, 0) == 2.0);
    }
    SUBCASE("random latent matches the double-loop oracle and is PSD")
    {
        std::mt19937_64 rng(1);
        const LatentTensor z = oracle::random_latent(rng, 4, 8, 8);
        const auto m = channel_moments(z);
        const Matrix expect = oracle::gram(z);
        CHECK((m.gram - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.cwiseAbs().maxCoeff());
        CHECK(m.gram == m.gram.transpose());
        CHECK(oracle::jacobi_eigen(m.gram).values.minCoeff() >= -1e-9);
        CHECK((m.mean - oracle::mean(z)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("whiten maps a diag(4, 9) gram to the identity")
{
    const LatentTensor z = diagonal_gram_latent(4.0, 9.0);
    CHECK((oracle::gram(z) - Eigen::Vector2d(4, 9).asDiagonal().toDenseMatrix()).norm() <= 1e-12);
    const Matrix g = oracle::gram(whiten(z));
    CHECK((g - Matrix::Identity(2, 2)).norm() <= 1e-8);
}

TEST_CASE("whitening an already white latent keeps an identity gram")
{
    std::mt19937_64 rng(2);
    const LatentTensor once = whiten(oracle::random_latent(rng, 4, 8, 8));
    const Matrix g = oracle::gram(whiten(once));
    CHECK((g - Matrix::Identity(4, 4)).norm() <= 1e-8);
}

TEST_CASE("whitening a rank-deficient latent takes the clamped path")
{
    std::mt19937_64 rng(3);
    Matrix flat = oracle::random_matrix(rng, 3, 36);
    flat.row(2) = flat.row(1);
    const LatentTensor out = whiten(LatentTensor(flat, 6, 6));
    CHECK(out.flat().allFinite());
    const Vector ev = oracle::jacobi_eigen(oracle::gram(out)).values;
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(ev[2]) <= 1e-8);
}

TEST_CASE("whitening a zero-variance latent is a degenerate-input error")
{
    CHECK_THROWS_AS(whiten(LatentTensor(2, 3, 3)), DegenerateError);
    Matrix flat = Matrix::Constant(2, 4, 0.7);
    CHECK_THROWS_AS(whiten(LatentTensor(flat, 2, 2)), DegenerateError);
}

TEST_CASE("coloring imposes the reference gram and mean")
{
    std::mt19937_64 rng(4);
    SUBCASE("diag(2, 8) reference")
    {
        LatentTensor ref = diagonal_gram_latent(2.0, 8.0);
        ref.flat().row(0).array() += 5.0;
        ref.flat().row(1).array() -= 1.0;
        const LatentTensor white = whiten(oracle::random_latent(rng, 2, 4, 4));
        const LatentTensor out = color(white, ref);
        const Matrix g = oracle::gram(out);
        CHECK((g - Eigen::Vector2d(2, 8).asDiagonal().toDenseMatrix()).norm() <= 1e-6);
        const Vector m = oracle::mean(out);
        CHECK(std::abs(m[0] - 5.0) <= 1e-10);
        CHECK(std::abs(m[1] + 1.0) <= 1e-10);
    }
    SUBCASE("whiten then color with itself as reference reproduces the gram")
    {
        const LatentTensor z = oracle::random_latent(rng, 4, 6, 6);
        const LatentTensor out = color(whiten(z), z);
        CHECK(oracle::rel_frobenius(oracle::gram(out), oracle::gram(z)) <= 1e-5);
        CHECK((oracle::mean(out) - oracle::mean(z)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("reference of a different spatial size")
    {
        const LatentTensor ref = oracle::random_latent(rng, 3, 5, 7);
        const LatentTensor out = color(whiten(oracle::random_latent(rng, 3, 8, 8)), ref);
        CHECK(out.height() == 8);
        // Unnormalized grams: the output carries the reference's gram as is.
        CHECK(oracle::rel_frobenius(oracle::gram(out), oracle::gram(ref)) <= 1e-5);
    }
    SUBCASE("errors")
    {
        const LatentTensor white = whiten(oracle::random_latent(rng, 2, 4, 4));
        CHECK_THROWS_AS(color(white, oracle::random_latent(rng, 3, 4, 4)), DimensionError);
        CHECK_THROWS_AS(color(white, LatentTensor(Matrix::Constant(2, 16, 1.0), 4, 4)), DegenerateError);
    }
}

TEST_CASE("wct moment contract")
{
    std::mt19937_64 rng(5);
    const RegWctConfig cfg = no_noise();
    SUBCASE("self reference")
    {
        const LatentTensor z = oracle::random_latent(rng, 4, 8, 8);
        const LatentTensor out = wct(z, z, cfg);
        CHECK(oracle::rel_frobenius(oracle::gram(out), oracle::gram(z)) <= 1e-5);
        CHECK((oracle::mean(out) - oracle::mean(z)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("applying twice leaves the gram in place")
    {
        const LatentTensor z = oracle::random_latent(rng, 4, 8, 8);
        const LatentTensor ref = oracle::random_latent(rng, 4, 8, 8);
        const LatentTensor once = wct(z, ref, cfg);
        const LatentTensor twice = wct(once, ref, cfg);
        CHECK(oracle::rel_frobenius(oracle::gram(twice), oracle::gram(once)) <= 1e-5);
    }
    SUBCASE("near-constant reference stays finite")
    {
        Matrix flat = Matrix::Constant(3, 64, 2.0) + 1e-9 * oracle::random_matrix(rng, 3, 64);
        flat.row(2).setConstant(2.0);
        const LatentTensor out = wct(oracle::random_latent(rng, 3, 8, 8), LatentTensor(flat, 8, 8), cfg);
        CHECK(out.flat().allFinite());
    }
    SUBCASE("channel mismatch")
    {
        CHECK_THROWS_AS(wct(oracle::random_latent(rng, 2, 4, 4), oracle::random_latent(rng, 3, 4, 4), cfg),
                        DimensionError);
    }
}

TEST_CASE("reg_wct noise")
{
    std::mt19937_64 rng(6);
    const LatentTensor z = oracle::random_latent(rng, 4, 64, 64);
    const LatentTensor ref = oracle::random_latent(rng, 4, 64, 64);
    RegWctConfig cfg;

    SUBCASE("lambda zero equals wct bitwise")
    {
        cfg.lambda = 0.0;
        Rng gen(1);
        CHECK(bitwise_equal(reg_wct(z, ref, cfg, gen), wct(z, ref, cfg)));
    }
    SUBCASE("same seed, same bytes")
    {
        Rng g1(42), g2(42);
        CHECK(bitwise_equal(reg_wct(z, ref, cfg, g1), reg_wct(z, ref, cfg, g2)));
    }
    SUBCASE("noise scale is lambda")
    {
        cfg.lambda = 0.01;
        Rng gen(7);
        const Matrix delta = reg_wct(z, ref, cfg, gen).flat() - wct(z, ref, cfg).flat();
        const double n = static_cast<double>(delta.size());
        REQUIRE(n >= 1e4);
        const double mean = delta.sum() / n;
        const double sd = std::sqrt((delta.array() - mean).square().sum() / (n - 1));
        CHECK(sd >= 0.009);
        CHECK(sd <= 0.011);
    }
}

TEST_CASE("timestep gate uses exact fractions with inclusive ends")
{
    const RegWctConfig cfg;
    CHECK(in_gate(600, 1000, cfg));
    CHECK(in_gate(800, 1000, cfg));
    CHECK(in_gate(700, 1000, cfg));
    CHECK_FALSE(in_gate(599, 1000, cfg));
    CHECK_FALSE(in_gate(801, 1000, cfg));
    CHECK_FALSE(in_gate(900, 1000, cfg));
    CHECK(in_gate(3, 5, cfg));
    CHECK(in_gate(4, 5, cfg));
    CHECK_FALSE(in_gate(5, 5, cfg));
    CHECK_THROWS_AS(in_gate(-1, 10, cfg), DomainError);
    CHECK_THROWS_AS(in_gate(11, 10, cfg), DomainError);
}

TEST_CASE("blend_step")
{
    std::mt19937_64 rng(8);
    const LatentTensor z = oracle::random_latent(rng, 4, 8, 8);
    const LatentTensor ref = oracle::random_latent(rng, 4, 8, 8);

    SUBCASE("closed gate returns the input bytes")
    {
        Rng gen(1);
        CHECK(bitwise_equal(blend_step(z, ref, 900, 1000, RegWctConfig{}, gen), z));
    }
    SUBCASE("omega zero inside the gate returns the input bytes")
    {
        RegWctConfig cfg;
        cfg.omega = 0.0;
        Rng gen(1);
        CHECK(bitwise_equal(blend_step(z, ref, 700, 1000, cfg, gen), z));
    }
    SUBCASE("omega one without noise is plain wct")
    {
        RegWctConfig cfg = no_noise();
        cfg.omega = 1.0;
        Rng gen(1);
        CHECK((blend_step(z, ref, 700, 1000, cfg, gen).flat() - wct(z, ref, cfg).flat()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("the blend is exactly affine for lambda zero")
    {
        for (double omega : {0.1, 0.25, 0.5, 0.9}) {
            RegWctConfig cfg = no_noise();
            cfg.omega = omega;
            Rng gen(1);
            const LatentTensor out = blend_step(z, ref, 650, 1000, cfg, gen);
            const Matrix expect = (1.0 - omega) * z.flat() + omega * wct(z, ref, cfg).flat();
            CHECK((out.flat() - expect).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("every timestep outside the gate is untouched")
    {
        const RegWctConfig cfg;
        Rng gen(3);
        for (long t = 0; t <= 1000; t += 7) {
            const LatentTensor out = blend_step(z, ref, t, 1000, cfg, gen);
            if (!in_gate(t, 1000, cfg)) {
                CHECK(bitwise_equal(out, z));
            } else {
                CHECK_FALSE(bitwise_equal(out, z));
            }
        }
    }
}

TEST_CASE("config validation")
{
    RegWctConfig cfg;
    cfg.omega = 1.5;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.lambda = -0.1;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.t_end_frac = 0.9;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.eig_floor = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("no operation emits non-finite values on random, rank-deficient and shifted inputs")
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        LatentTensor z = oracle::random_latent(rng, 1 + trial % 5, 4, 4);
        if (z.channels() > 1 && trial % 3 == 0) z.flat().row(0) = 2.0 * z.flat().row(1);
        z.flat().array() += 1e4 * (trial % 2);
        const LatentTensor ref = oracle::random_latent(rng, z.channels(), 3, 5);
        Rng gen(static_cast<std::uint64_t>(trial));
        CHECK(blend_step(z, ref, 700, 1000, RegWctConfig{}, gen).flat().allFinite());
    }
}
