#include "krod/burgers.hpp"
#include "krod/krod.hpp"
#include "krod/metrics.hpp"
#include "krod/twin.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace krod;

namespace {

struct Exp1Twin {
    SnapshotSet snaps;
    Matrix V0, V1;
    KoopmanTriplet triplet;
    TwinModel twin;
    Exp1Twin()
    {
        snaps            = generate_snapshots(preset_experiment("exp1"));
        std::tie(V0, V1) = split_snapshots(snaps.values);
        triplet          = krod_offline(V0, V1, 10, 17);
        NlarxFitOptions o;
        twin = build_twin(triplet, snaps.values.col(0), 0.0, snaps.dt, o, 5);
    }
};

const Exp1Twin& exp1()
{
    static const Exp1Twin d;
    return d;
}

} // namespace

TEST(InitialCoefficients, BasisAndOrthogonalComplement)
{
    Matrix phi = Matrix::Zero(4, 2);
    phi(0, 0)  = 1;
    phi(1, 1)  = 1;
    EXPECT_EQ(initial_coefficients(phi.col(0), phi), Vector::Unit(2, 0));
    Vector perp = Vector::Zero(4);
    perp(3)     = 2;
    EXPECT_TRUE(initial_coefficients(perp, phi).isZero(0.0));
    EXPECT_THROW(initial_coefficients(Vector::Zero(3), phi), ConfigError);
}

TEST(InitialCoefficients, Exp1MatchesFirstAmplitudeColumn)
{
    const auto& d = exp1();
    EXPECT_LE((d.twin.a0 - d.triplet.amplitudes.col(0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((d.twin.a0 - d.triplet.amplitudes.col(1)).cwiseAbs().maxCoeff(), 1e-1);
}

TEST(FoldBoundaries, ThreeHundredColumns)
{
    EXPECT_EQ(fold_boundary(300, 1), 200);
    EXPECT_EQ(fold_boundary(300, 2), 100);
    EXPECT_EQ(training_length(300, 2.0 / 3.0), 200);
    EXPECT_THROW(fold_boundary(300, 3), ConfigError);
}

TEST(TwofoldValidate, Exp1CoefficientsTrackHeldOutData)
{
    const auto& d = exp1();
    const auto report = twofold_validate(d.twin, d.triplet.amplitudes, NlarxFitOptions{}, 5);
    EXPECT_EQ(report.folds[0].train_end, 200);
    EXPECT_EQ(report.folds[1].train_end, 100);
    EXPECT_GE(report.folds[0].fit_percent[0], 90.0);
    EXPECT_GE(report.folds[0].mean_fit(), 80.0);
    // fold 1 reuses the twin's surrogates (same window, same seeds)
    EXPECT_TRUE(report.folds[0].simulated.row(0).transpose() ==
                simulate_nlarx(d.twin.surrogates[0], d.triplet.amplitudes.row(0).transpose(), 300,
                               SimulationMode::FreeRun));
}

TEST(TwofoldValidate, OscillatingCoefficientsRecoveredInBothFolds)
{
    // each row obeys an exact second-order recurrence and stays excited in every window
    Matrix A(2, 150);
    for (int t = 0; t < 150; ++t) {
        A(0, t) = std::cos(0.11 * t + 0.3);
        A(1, t) = 0.5 * std::sin(0.07 * t) + 0.2;
    }
    TwinModel twin;
    twin.triplet.rank       = 2;
    twin.triplet.amplitudes = A;
    twin.triplet.modes      = Matrix::Identity(3, 2);
    const auto report       = twofold_validate(twin, A, NlarxFitOptions{}, 3);
    for (const auto& f : report.folds)
        for (double fit : f.fit_percent) EXPECT_GE(fit, 99.0) << "fold " << f.fold;
}

TEST(TwofoldValidate, Preconditions)
{
    TwinModel twin;
    twin.triplet.rank = 1;
    EXPECT_THROW(twofold_validate(twin, Matrix::Ones(1, 8), NlarxFitOptions{}, 1), ConfigError);
    EXPECT_THROW(twofold_validate(twin, Matrix::Ones(2, 30), NlarxFitOptions{}, 1), ConfigError);
}

TEST(TwinPredict, OneStepIsCompositional)
{
    const auto& d = exp1();
    std::vector<double> times;
    for (int i = 0; i < 300; ++i) times.push_back(i * d.snaps.dt);
    PredictOptions o;
    o.mode         = SimulationMode::OneStep;
    const Matrix u = twin_predict(d.twin, times, o);
    const Matrix a = predict_amplitudes(d.twin, 300, o);
    EXPECT_LE((u - d.triplet.modes * a).norm(), 1e-10);
}

TEST(TwinPredict, Exp1FullGridCorrelation)
{
    const auto& d = exp1();
    std::vector<double> times;
    for (int i = 0; i < 300; ++i) times.push_back(i * d.snaps.dt);
    const Matrix u = twin_predict(d.twin, times);
    EXPECT_GE(pearson(d.V0, u), 0.999);
}

TEST(TwinPredict, ExtrapolatesAndRejectsEarlyTimes)
{
    const auto& d = exp1();
    const Matrix u = twin_predict(d.twin, {0.0, 3.5, 4.0});
    EXPECT_EQ(u.cols(), 3);
    EXPECT_TRUE(u.allFinite());
    EXPECT_THROW(twin_predict(d.twin, {-0.1}), ConfigError);
}
