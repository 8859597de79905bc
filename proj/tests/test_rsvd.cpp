#include "krod/rsvd.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace krod;

namespace {

double orthonormality_gap(const Matrix& Q)
{
    return (Q.transpose() * Q - Matrix::Identity(Q.cols(), Q.cols())).norm();
}

Matrix product(const RsvdFactors& f) { return f.U * f.S.asDiagonal() * f.W.transpose(); }

} // namespace

TEST(Rsvd, RankOneOuterProduct)
{
    RandomStream s(3);
    const Vector u = s.normal_matrix(17, 1).col(0);
    const Vector v = s.normal_matrix(11, 1).col(0);
    const auto f   = rsvd(u * v.transpose(), 2, 1);
    EXPECT_NEAR(f.S(0), u.norm() * v.norm(), 1e-12 * f.S(0));
    EXPECT_LE(f.S(1), 1e-10 * f.S(0));
    EXPECT_LE(orthonormality_gap(f.U), 1e-10);
    EXPECT_LE(orthonormality_gap(f.W), 1e-10);
}

TEST(Rsvd, EmbeddedDiagonal)
{
    Matrix V = Matrix::Zero(10, 10);
    V(0, 0)  = 3;
    V(1, 1)  = 2;
    V(2, 2)  = 1;
    const auto f = rsvd(V, 3, 11);
    EXPECT_NEAR(f.S(0), 3.0, 1e-10);
    EXPECT_NEAR(f.S(1), 2.0, 1e-10);
    EXPECT_NEAR(f.S(2), 1.0, 1e-10);
}

TEST(Rsvd, ExactRankFiveAgainstFullSvd)
{
    RandomStream s(5);
    const Matrix V = s.normal_matrix(50, 5) * s.normal_matrix(5, 30);
    const auto f   = rsvd(V, 5, 123);
    Eigen::BDCSVD<Matrix> full(V);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(f.S(i), full.singularValues()(i), 1e-8 * full.singularValues()(i));
    EXPECT_LE((V - product(f)).norm(), 1e-8 * V.norm());
}

TEST(Rsvd, DeterministicBitwise)
{
    const Matrix V = oracle::random_rank_matrix(40, 25, 8, 77);
    const auto a   = rsvd(V, 6, 2026);
    const auto b   = rsvd(V, 6, 2026);
    EXPECT_TRUE(a.U == b.U);
    EXPECT_TRUE(a.S == b.S);
    EXPECT_TRUE(a.W == b.W);
    EXPECT_EQ(a.seed, 2026u);
}

TEST(Rsvd, SubspaceIndependentOfSeedForExactRank)
{
    const Matrix V = oracle::random_rank_matrix(60, 45, 7, 8);
    const auto a   = rsvd(V, 7, 1);
    const auto b   = rsvd(V, 7, 2);
    EXPECT_LE((a.U * a.U.transpose() - b.U * b.U.transpose()).norm(), 1e-8);
}

TEST(Rsvd, SortedNonNegativeAndOrthonormal)
{
    for (int trial = 0; trial < 10; ++trial) {
        RandomStream s(100 + trial);
        const Matrix V = s.normal_matrix(30 + trial, 20);
        const auto f   = rsvd(V, 8, trial);
        for (int i = 0; i < 8; ++i) {
            EXPECT_GE(f.S(i), 0.0);
            if (i) {
                EXPECT_LE(f.S(i), f.S(i - 1));
            }
        }
        EXPECT_LE(orthonormality_gap(f.U), 1e-10);
        EXPECT_LE(orthonormality_gap(f.W), 1e-10);
    }
}

TEST(Rsvd, RankBelowTargetCompletesBasis)
{
    const Matrix V = oracle::random_rank_matrix(30, 20, 3, 4);
    const auto f   = rsvd(V, 6, 9);
    EXPECT_EQ(f.sketch_rank, 3);
    EXPECT_LE(orthonormality_gap(f.U), 1e-10);
    EXPECT_LE(f.S(3), 1e-10 * f.S(0));
    EXPECT_LE((V - product(f)).norm(), 1e-8 * V.norm());
}

TEST(Rsvd, Preconditions)
{
    const Matrix V = Matrix::Ones(6, 4);
    EXPECT_THROW(rsvd(V, 1, 0), ConfigError);
    EXPECT_THROW(rsvd(V, 5, 0), ConfigError);
    Matrix bad = V;
    bad(2, 2)  = std::nan("");
    EXPECT_THROW(rsvd(bad, 2, 0), ConfigError);
}
