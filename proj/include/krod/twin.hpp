#pragma once

// Online twin: modes from the offline decomposition, one NLARX surrogate
// per modal amplitude, and the two-fold input-output validation.

#include "krod/core.hpp"
#include "krod/krod.hpp"
#include "krod/nlarx.hpp"
#include "krod/rng.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace krod {

struct TwinModel {
    KoopmanTriplet triplet;
    Vector a0; // Phi^T u0
    std::vector<NlarxModel> surrogates;
    double t0 = 0.0;
    double dt = 0.0;

    [[nodiscard]] int rank() const noexcept { return triplet.rank; }
};

/// a0 = Phi^T u0.
inline Vector initial_coefficients(const Vector& u0, const Matrix& modes)
{
    if (u0.size() != modes.rows())
        throw ConfigError("initial_coefficients: u0 has " + std::to_string(u0.size()) + " entries but modes have " +
                          std::to_string(modes.rows()) + " rows");
    return modes.transpose() * u0;
}

/// Child seed for the surrogate of coefficient j.
inline Seed surrogate_seed(Seed master, std::size_t j) { return derive_seed(master, "nlarx", j); }

inline TwinModel build_twin(const KoopmanTriplet& triplet, const Vector& u0, double t0, double dt,
                            const NlarxFitOptions& options, Seed seed)
{
    TwinModel twin;
    twin.triplet = triplet;
    twin.a0      = initial_coefficients(u0, triplet.modes);
    twin.t0      = t0;
    twin.dt      = dt;
    twin.surrogates.reserve(static_cast<std::size_t>(triplet.rank));
    for (int j = 0; j < triplet.rank; ++j) {
        const Vector series = triplet.amplitudes.row(j).transpose();
        try {
            twin.surrogates.push_back(fit_nlarx(series, options, surrogate_seed(seed, static_cast<std::size_t>(j))));
        } catch (const NumericalError& e) {
            throw NumericalError("coefficient " + std::to_string(j) + ": " + e.what());
        }
    }
    return twin;
}

/// Train length of fold f (1: first two thirds, 2: first third).
inline int fold_boundary(int n, int fold)
{
    if (fold == 1) return n * 2 / 3;
    if (fold == 2) return n / 3;
    throw ConfigError("fold_boundary: fold must be 1 or 2");
}

/// 100 (1 - ||y - yhat|| / ||y - mean(y)||) over [begin, end).
inline double fit_percent(const Vector& measured, const Vector& simulated, int begin, int end)
{
    const int len     = end - begin;
    const auto y      = measured.segment(begin, len);
    const auto yhat   = simulated.segment(begin, len);
    const double mean = y.mean();
    const double spread = (y.array() - mean).matrix().norm();
    const double miss   = (y - yhat).norm();
    if (!(spread > 0.0)) return miss == 0.0 ? 100.0 : -std::numeric_limits<double>::infinity();
    return 100.0 * (1.0 - miss / spread);
}

struct FoldResult {
    int fold           = 0;
    int train_end      = 0; // exclusive column index
    std::vector<double> fit_percent;  // per coefficient
    std::vector<double> rmse;         // per coefficient, validation window
    Matrix simulated;                 // N_DTM x N_t
    Matrix residuals;                 // measured - simulated

    [[nodiscard]] double mean_fit() const
    {
        double s = 0.0;
        for (double f : fit_percent) s += f;
        return fit_percent.empty() ? 0.0 : s / static_cast<double>(fit_percent.size());
    }
};

struct ValidationReport {
    FoldResult folds[2];
};

namespace detail {

inline FoldResult run_fold(const Matrix& A, int fold, const NlarxFitOptions& options, Seed seed,
                           const std::vector<NlarxModel>* reuse)
{
    const int n = static_cast<int>(A.cols());
    FoldResult r;
    r.fold      = fold;
    r.train_end = fold_boundary(n, fold);
    r.simulated.resize(A.rows(), n);

    NlarxFitOptions fold_options = options;
    fold_options.train_fraction  = static_cast<double>(r.train_end) / n;
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        const Vector series = A.row(j).transpose();
        NlarxModel model;
        if (reuse && static_cast<std::size_t>(j) < reuse->size() && (*reuse)[j].train_samples == r.train_end)
            model = (*reuse)[j];
        else
            model = fit_nlarx(series, fold_options, surrogate_seed(seed, static_cast<std::size_t>(j)));
        const Vector sim = simulate_nlarx(model, series, n, SimulationMode::FreeRun, n);
        r.simulated.row(j) = sim.transpose();
        r.fit_percent.push_back(fit_percent(series, sim, r.train_end, n));
        r.rmse.push_back(rmse(series, sim, r.train_end, n));
    }
    r.residuals = A - r.simulated;
    return r;
}

} // namespace detail

/// Fold 1 trains on the first 2/3 of the amplitude columns and validates on
/// the rest; fold 2 trains on the first 1/3. Validation simulates each
/// surrogate in free-run mode with the measured amplitudes as exogenous input.
/// Surrogates already trained on a fold's window are reused instead of refit.
inline ValidationReport twofold_validate(const TwinModel& twin, const Matrix& A_true, const NlarxFitOptions& options,
                                         Seed seed)
{
    if (A_true.cols() < 9) throw ConfigError("twofold_validate: need at least 9 columns, got " +
                                             std::to_string(A_true.cols()));
    if (A_true.rows() != twin.rank())
        throw ConfigError("twofold_validate: amplitudes have " + std::to_string(A_true.rows()) +
                          " rows but the twin has rank " + std::to_string(twin.rank()));
    ValidationReport report;
    report.folds[0] = detail::run_fold(A_true, 1, options, seed, &twin.surrogates);
    report.folds[1] = detail::run_fold(A_true, 2, options, seed, &twin.surrogates);
    return report;
}

struct PredictOptions {
    SimulationMode mode = SimulationMode::FreeRun;
    /// Measured amplitudes are used as exogenous input before this column
    /// (default: all of them) and held constant afterwards.
    int input_boundary = -1;
};

/// Predicted amplitudes at integer steps 0..horizon-1 (rows = coefficients).
inline Matrix predict_amplitudes(const TwinModel& twin, int horizon, const PredictOptions& options = {})
{
    if (static_cast<int>(twin.surrogates.size()) != twin.rank())
        throw ConfigError("twin_predict: twin has " + std::to_string(twin.surrogates.size()) + " surrogates for rank " +
                          std::to_string(twin.rank()));
    Matrix out(twin.rank(), horizon);
    for (int j = 0; j < twin.rank(); ++j) {
        const Vector measured = twin.triplet.amplitudes.row(j).transpose();
        out.row(j) = simulate_nlarx(twin.surrogates[j], measured, horizon, options.mode, options.input_boundary).transpose();
    }
    // the first column is the projected initial condition
    if (horizon > 0) out.col(0) = twin.a0;
    return out;
}

/// u_DTM(x, t) = sum_j ahat_j(t) phi_j(x) at the requested times, which are
/// rounded to the nearest step of the training grid.
inline Matrix twin_predict(const TwinModel& twin, const std::vector<double>& times, const PredictOptions& options = {})
{
    if (!(twin.dt > 0.0)) throw ConfigError("twin_predict: twin has no time step");
    std::vector<int> steps;
    steps.reserve(times.size());
    int horizon = 1;
    for (double t : times) {
        if (!(t >= twin.t0 - 1e-9 * twin.dt))
            throw ConfigError("twin_predict: time " + std::to_string(t) + " precedes t0 = " + std::to_string(twin.t0));
        const int step = static_cast<int>(std::llround((t - twin.t0) / twin.dt));
        steps.push_back(step);
        horizon = std::max(horizon, step + 1);
    }
    const Matrix a = predict_amplitudes(twin, horizon, options);
    Matrix selected(twin.rank(), static_cast<Eigen::Index>(steps.size()));
    for (std::size_t i = 0; i < steps.size(); ++i) selected.col(static_cast<Eigen::Index>(i)) = a.col(steps[i]);
    return twin.triplet.modes * selected;
}

} // namespace krod
