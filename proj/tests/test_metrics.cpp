#include "krod/metrics.hpp"
#include "krod/rng.hpp"

#include <gtest/gtest.h>

using namespace krod;

TEST(Mac, IdentityAndScaledColumns)
{
    EXPECT_TRUE(mac_matrix(Matrix::Identity(4, 4)).isApprox(Matrix::Identity(4, 4)));
    RandomStream s(1);
    Matrix phi(6, 2);
    phi.col(0) = s.normal_matrix(6, 1);
    phi.col(1) = 3.0 * phi.col(0);
    EXPECT_NEAR(mac_matrix(phi)(0, 1), 1.0, 1e-14);
    Matrix zero = Matrix::Ones(3, 2);
    zero.col(1).setZero();
    EXPECT_THROW(mac_matrix(zero), ConfigError);
}

TEST(Mac, BoundsSymmetryAndScaleInvariance)
{
    RandomStream s(2);
    const Matrix phi = s.normal_matrix(12, 5);
    const Matrix m   = mac_matrix(phi);
    EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(m.minCoeff(), 0.0);
    EXPECT_LE(m.maxCoeff(), 1.0 + 1e-12);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(m(i, i), 1.0, 1e-12);
    Vector d(5);
    for (int i = 0; i < 5; ++i) d(i) = 0.1 + s.uniform() * 10;
    EXPECT_LE((mac_matrix(phi * d.asDiagonal()) - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pearson, IdentityAndAnticorrelation)
{
    RandomStream s(3);
    const Matrix u = s.normal_matrix(8, 6);
    EXPECT_NEAR(pearson(u, u), 1.0, 1e-14);
    EXPECT_NEAR(pearson(u, (-u.array() + 4.0).matrix()), -1.0, 1e-14);
    EXPECT_THROW(pearson(u, Matrix::Constant(8, 6, 2.0)), NumericalError);
    EXPECT_THROW(pearson(u, Matrix::Ones(8, 5)), ConfigError);
}

TEST(Pearson, AffineInvariance)
{
    RandomStream s(4);
    const Matrix u = s.normal_matrix(10, 7);
    const Matrix v = u + 0.5 * s.normal_matrix(10, 7);
    const double r = pearson(u, v);
    for (double a : {-3.0, -0.2, 0.7, 12.0})
        for (double b : {-1.0, 0.0, 5.0})
            EXPECT_NEAR(pearson(u, (a * v.array() + b).matrix()), (a > 0 ? 1 : -1) * r, 1e-12);
}

TEST(Mae, ConstantOffsetAndConsistency)
{
    RandomStream s(5);
    const Matrix u = s.normal_matrix(5, 9);
    EXPECT_EQ(mae(u, u), 0.0);
    EXPECT_TRUE(local_error(u, u).isZero(0.0));
    const Matrix shifted = (u.array() + 0.5).matrix();
    EXPECT_NEAR(mae(u, shifted), 0.5, 1e-15);
    EXPECT_LE((local_error(u, shifted).array() - 0.5).abs().maxCoeff(), 1e-15);

    const Matrix v = s.normal_matrix(5, 9);
    const auto rep = evaluate(u, v, s.normal_matrix(5, 3));
    EXPECT_NEAR(rep.mae, rep.local_error.mean(), 1e-12);
    EXPECT_GE(rep.local_error.minCoeff(), 0.0);
    EXPECT_THROW(mae(u, Matrix::Zero(4, 9)), ConfigError);
}
