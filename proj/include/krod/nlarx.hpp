#pragma once

// Single-input single-output NLARX surrogate
//
//   y(t) = F(y(t-1..t-na), u(t-nk..t-nk-nb+1)) + e(t)
//   F(r) = w.r + b + v.tanh(W r + c)
//
// i.e. a linear bypass plus one tanh hidden layer, trained on scaled data
// with Levenberg-Marquardt on the mean squared one-step error.

#include "krod/core.hpp"
#include "krod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace krod {

struct NlarxOrders {
    int na = 1; // past outputs
    int nb = 1; // past inputs
    int nk = 1; // input delay

    [[nodiscard]] int regressors() const noexcept { return na + nb; }
    /// Earliest target index with a complete regressor.
    [[nodiscard]] int max_lag() const noexcept { return std::max(na, nk + nb - 1); }

    friend bool operator==(const NlarxOrders&, const NlarxOrders&) = default;
};

struct AffineScaler {
    double mean  = 0.0;
    double scale = 1.0;

    [[nodiscard]] double forward(double x) const noexcept { return (x - mean) / scale; }
    [[nodiscard]] double inverse(double z) const noexcept { return z * scale + mean; }

    static AffineScaler fit(const double* data, std::size_t n)
    {
        AffineScaler s;
        if (n == 0) return s;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += data[i];
        s.mean     = sum / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (data[i] - s.mean) * (data[i] - s.mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        // a constant (or numerically constant) channel keeps unit scale
        s.scale = sd > 1e-12 * std::max(1.0, std::abs(s.mean)) ? sd : 1.0;
        return s;
    }
};

struct NlarxModel {
    NlarxOrders orders;
    int hidden_width = 8;
    Vector theta; // [w (d) | b | v (h) | W (h x d, row-major) | c (h)]
    AffineScaler output_scaling;
    AffineScaler input_scaling;
    double train_loss      = 0.0; // (1 / 2N') sum |y - yhat| over the training targets
    double validation_rmse = 0.0; // selection score, see OrderSelection
    double one_step_rmse   = 0.0; // one-step RMSE over the same window
    int train_samples      = 0;   // series prefix length used for training
    int iterations         = 0;
    std::vector<double> loss_history; // scaled MSE at each optimizer checkpoint

    [[nodiscard]] static Eigen::Index parameter_count(const NlarxOrders& o, int h) noexcept
    {
        const Eigen::Index d = o.regressors();
        return d + 1 + h + h * d + h;
    }
};

enum class SimulationMode { OneStep, FreeRun };

/// Score used to rank candidate orders on the held-out suffix.
enum class OrderSelection {
    FreeRun, ///< closed-loop simulation with measured exogenous input
    OneStep, ///< measured past outputs
};

struct NlarxFitOptions {
    std::vector<NlarxOrders> order_grid;
    OrderSelection selection = OrderSelection::FreeRun;
    int hidden_width   = 8;
    double train_fraction = 2.0 / 3.0;
    int max_iterations = 100; // Levenberg-Marquardt steps per candidate order
    /// Stop after three accepted steps in a row that each improve the loss by
    /// less than this fraction.
    double tolerance = 1e-6;

    static std::vector<NlarxOrders> default_grid()
    {
        std::vector<NlarxOrders> grid;
        for (int na = 1; na <= 3; ++na)
            for (int nb = 1; nb <= 3; ++nb)
                for (int nk = 1; nk <= 2; ++nk) grid.push_back({na, nb, nk});
        return grid;
    }
};


namespace detail {

inline void check_orders(const NlarxOrders& o)
{
    if (o.na < 0 || o.nb < 1 || o.nk < 0 || o.regressors() < 1)
        throw ConfigError("nlarx: invalid orders na=" + std::to_string(o.na) + " nb=" + std::to_string(o.nb) +
                          " nk=" + std::to_string(o.nk));
}

/// Scaled regressor for target index t. `y_at(i)` and `u_at(i)` return raw values.
template <class Y, class U>
inline void fill_regressor(const NlarxModel& m, int t, Y&& y_at, U&& u_at, Eigen::Ref<Vector> r)
{
    const auto& o = m.orders;
    for (int i = 0; i < o.na; ++i) r(i) = m.output_scaling.forward(y_at(t - 1 - i));
    for (int i = 0; i < o.nb; ++i) r(o.na + i) = m.input_scaling.forward(u_at(t - o.nk - i));
}

/// Network output in scaled units.
inline double evaluate_network(const NlarxModel& m, const Vector& r)
{
    const Eigen::Index d = r.size();
    const int h          = m.hidden_width;
    const double* th     = m.theta.data();
    double z             = th[d]; // bias
    for (Eigen::Index j = 0; j < d; ++j) z += th[j] * r(j);
    const double* v = th + d + 1;
    const double* W = v + h;
    const double* c = W + h * d;
    for (int i = 0; i < h; ++i) {
        double s = c[i];
        for (Eigen::Index j = 0; j < d; ++j) s += W[i * d + j] * r(j);
        z += v[i] * std::tanh(s);
    }
    return z;
}

/// Scaled regression problem: rows of R are regressors, z the targets.
struct RegressionData {
    Matrix R;
    Vector z;
};

inline RegressionData build_regression(const NlarxModel& m, const Vector& y, const Vector& u, int begin, int end)
{
    RegressionData data;
    const int n = std::max(0, end - begin);
    data.R.resize(n, m.orders.regressors());
    data.z.resize(n);
    auto ya = [&](int i) { return y(i); };
    auto ua = [&](int i) { return u(i); };
    Vector r(m.orders.regressors());
    for (int t = begin; t < end; ++t) {
        fill_regressor(m, t, ya, ua, r);
        data.R.row(t - begin) = r.transpose();
        data.z(t - begin)     = m.output_scaling.forward(y(t));
    }
    return data;
}

/// Residuals yhat - z and (optionally) their Jacobian with respect to theta.
inline void residuals_and_jacobian(const NlarxModel& m, const RegressionData& data, Vector& res, Matrix* jac)
{
    const Eigen::Index n = data.R.rows();
    const Eigen::Index d = data.R.cols();
    const int h          = m.hidden_width;
    const double* th     = m.theta.data();
    const double* v      = th + d + 1;
    const double* W      = v + h;
    const double* c      = W + h * d;

    res.resize(n);
    if (jac) jac->resize(n, m.theta.size());
    std::vector<double> g(static_cast<std::size_t>(h));
    for (Eigen::Index s = 0; s < n; ++s) {
        double z = th[d];
        for (Eigen::Index j = 0; j < d; ++j) z += th[j] * data.R(s, j);
        for (int i = 0; i < h; ++i) {
            double a = c[i];
            for (Eigen::Index j = 0; j < d; ++j) a += W[i * d + j] * data.R(s, j);
            g[i] = std::tanh(a);
            z += v[i] * g[i];
        }
        res(s) = z - data.z(s);
        if (!jac) continue;
        auto J = jac->row(s);
        for (Eigen::Index j = 0; j < d; ++j) J(j) = data.R(s, j);
        J(d) = 1.0;
        for (int i = 0; i < h; ++i) {
            J(d + 1 + i)        = g[i];
            const double dact   = v[i] * (1.0 - g[i] * g[i]);
            for (Eigen::Index j = 0; j < d; ++j) J(d + 1 + h + i * d + j) = dact * data.R(s, j);
            J(d + 1 + h + h * d + i) = dact;
        }
    }
}

} // namespace detail

/// Scaled training objective (1/2N) sum (yhat - z)^2 and its gradient.
inline double nlarx_objective(const NlarxModel& m, const detail::RegressionData& data, Vector* gradient = nullptr)
{
    Vector res;
    Matrix jac;
    detail::residuals_and_jacobian(m, data, res, gradient ? &jac : nullptr);
    const double n = static_cast<double>(std::max<Eigen::Index>(1, res.size()));
    if (gradient) *gradient = jac.transpose() * res / n;
    return 0.5 * res.squaredNorm() / n;
}

/// Simulates `horizon` samples. The first max_lag samples copy the measured
/// series. In free-run mode past outputs are the model's own predictions and
/// exogenous inputs at or beyond `input_boundary` are held at the last
/// measured value before it.
inline Vector simulate_nlarx(const NlarxModel& model, const Vector& exogenous, int horizon, SimulationMode mode,
                             int input_boundary = -1)
{
    detail::check_orders(model.orders);
    if (horizon < 1) throw ConfigError("simulate_nlarx: horizon must be >= 1");
    const int available = static_cast<int>(exogenous.size());
    const int lag       = model.orders.max_lag();
    if (mode == SimulationMode::OneStep && horizon > available)
        throw ConfigError("simulate_nlarx: horizon " + std::to_string(horizon) + " exceeds the " +
                          std::to_string(available) + " measured samples available in one-step mode");
    if (available < std::min(lag, horizon))
        throw ConfigError("simulate_nlarx: need " + std::to_string(lag) + " measured samples to prime the model");
    const int boundary = input_boundary < 0 ? available : std::min(input_boundary, available);
    if (boundary < 1) throw ConfigError("simulate_nlarx: input boundary must leave at least one measured input");

    Vector out(horizon);
    auto u_at = [&](int i) { return exogenous(std::min(i, boundary - 1)); };
    auto y_measured = [&](int i) { return exogenous(i); };
    auto y_sim      = [&](int i) { return out(i); };
    Vector r(model.orders.regressors());
    for (int t = 0; t < horizon; ++t) {
        if (t < lag) {
            out(t) = exogenous(t);
            continue;
        }
        if (mode == SimulationMode::OneStep)
            detail::fill_regressor(model, t, y_measured, u_at, r);
        else
            detail::fill_regressor(model, t, y_sim, u_at, r);
        out(t) = model.output_scaling.inverse(detail::evaluate_network(model, r));
        if (!std::isfinite(out(t)))
            throw NumericalError("simulate_nlarx: non-finite prediction at step " + std::to_string(t));
    }
    return out;
}

namespace detail {

inline double rmse(const Vector& a, const Vector& b, int begin, int end)
{
    if (end <= begin) return 0.0;
    return std::sqrt((a.segment(begin, end - begin) - b.segment(begin, end - begin)).squaredNorm() / (end - begin));
}

// Levenberg-Marquardt on the scaled objective; only accepts improving steps,
// so the loss history is non-increasing.
inline void train_levenberg_marquardt(NlarxModel& m, const RegressionData& data, int max_iterations, double tolerance)
{
    const Eigen::Index p = m.theta.size();
    Vector res;
    Matrix jac;
    residuals_and_jacobian(m, data, res, &jac);
    const double n = static_cast<double>(std::max<Eigen::Index>(1, res.size()));
    double loss    = 0.5 * res.squaredNorm() / n;
    if (!std::isfinite(loss)) throw NumericalError("fit_nlarx: non-finite initial loss");
    m.loss_history = {loss};

    double lambda = 1e-3;
    int stalls    = 0;
    int it        = 0;
    for (; it < max_iterations && loss > 0.0; ++it) {
        const Matrix JtJ = jac.transpose() * jac;
        const Vector Jtr = jac.transpose() * res;
        bool accepted    = false;
        while (lambda < 1e12) {
            Matrix H = JtJ;
            for (Eigen::Index i = 0; i < p; ++i) H(i, i) += lambda * (JtJ(i, i) + 1e-9);
            const Vector step = H.ldlt().solve(-Jtr);
            const Vector previous = m.theta;
            m.theta += step;
            Vector trial_res;
            residuals_and_jacobian(m, data, trial_res, nullptr);
            const double trial_loss = 0.5 * trial_res.squaredNorm() / n;
            if (std::isfinite(trial_loss) && trial_loss < loss) {
                const double gain = (loss - trial_loss) / loss;
                loss              = trial_loss;
                lambda            = std::max(lambda / 3.0, 1e-12);
                accepted          = true;
                stalls            = gain < tolerance ? stalls + 1 : 0;
                break;
            }
            m.theta = previous;
            lambda *= 4.0;
        }
        if (!accepted) break;
        m.loss_history.push_back(loss);
        if (stalls >= 3) {
            ++it;
            break;
        }
        residuals_and_jacobian(m, data, res, &jac);
    }
    m.iterations = it;
}

// Linear block by minimum-norm least squares; hidden weights random, output weights zero.
inline void initialize_weights(NlarxModel& m, const RegressionData& data, Seed seed)
{
    const Eigen::Index d = m.orders.regressors();
    const int h          = m.hidden_width;
    m.theta              = Vector::Zero(NlarxModel::parameter_count(m.orders, h));

    Matrix X(data.R.rows(), d + 1);
    X.leftCols(d) = data.R;
    X.col(d).setOnes();
    const Vector beta = X.completeOrthogonalDecomposition().solve(data.z);
    m.theta.head(d + 1) = beta;

    RandomStream stream(seed);
    const double spread = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = d + 1 + h; i < m.theta.size(); ++i) m.theta(i) = spread * stream.normal();
}

} // namespace detail

/// Trains one candidate with fixed orders on the first `train_samples` points.
inline NlarxModel train_nlarx(const Vector& series, const NlarxOrders& orders, int hidden_width, int train_samples,
                              int max_iterations, Seed seed, double tolerance = 1e-6)
{
    detail::check_orders(orders);
    if (hidden_width < 1) throw ConfigError("fit_nlarx: hidden width must be >= 1");
    const int n   = static_cast<int>(series.size());
    const int lag = orders.max_lag();
    if (train_samples > n || train_samples - lag < 2)
        throw ConfigError("fit_nlarx: series of " + std::to_string(n) + " samples (" + std::to_string(train_samples) +
                          " for training) is too short for lag " + std::to_string(lag));
    if (!series.allFinite()) throw ConfigError("fit_nlarx: series contains non-finite values");

    NlarxModel m;
    m.orders         = orders;
    m.hidden_width   = hidden_width;
    m.train_samples  = train_samples;
    m.output_scaling = AffineScaler::fit(series.data(), static_cast<std::size_t>(train_samples));
    m.input_scaling  = m.output_scaling;

    const auto data = detail::build_regression(m, series, series, lag, train_samples);
    detail::initialize_weights(m, data, seed);
    detail::train_levenberg_marquardt(m, data, max_iterations, tolerance);

    const Vector replay = simulate_nlarx(m, series, train_samples, SimulationMode::OneStep);
    double abs_sum      = 0.0;
    for (int t = lag; t < train_samples; ++t) abs_sum += std::abs(series(t) - replay(t));
    m.train_loss = abs_sum / (2.0 * (train_samples - lag));
    if (!std::isfinite(m.train_loss)) throw NumericalError("fit_nlarx: non-finite training loss");
    return m;
}

/// Number of training samples for a fraction of n (exact for n * fraction integral).
inline int training_length(int n, double train_fraction)
{
    return static_cast<int>(std::floor(train_fraction * n + 1e-9));
}

/// Order search: one candidate per grid entry, ranked on the held-out suffix
/// (the whole series past the priming window when train_fraction is 1).
/// Ties keep the earlier grid entry.
inline NlarxModel fit_nlarx(const Vector& series, const NlarxFitOptions& options, Seed seed)
{
    const auto& grid = options.order_grid.empty() ? NlarxFitOptions::default_grid() : options.order_grid;
    if (!(options.train_fraction > 0.0 && options.train_fraction <= 1.0))
        throw ConfigError("fit_nlarx: train_fraction must be in (0, 1]");
    if (options.max_iterations < 0 || options.max_iterations > 5000)
        throw ConfigError("fit_nlarx: max_iterations must be in [0, 5000]");
    const int n      = static_cast<int>(series.size());
    const int ntrain = training_length(n, options.train_fraction);
    if (ntrain < n && n - ntrain < 10)
        throw ConfigError("fit_nlarx: train_fraction leaves " + std::to_string(n - ntrain) +
                          " validation samples, need at least 10");
    int widest = 0;
    for (const auto& o : grid) {
        detail::check_orders(o);
        widest = std::max(widest, o.max_lag());
    }
    if (ntrain - widest < 2)
        throw ConfigError("fit_nlarx: series of " + std::to_string(n) + " samples is shorter than the lag " +
                          std::to_string(widest) + " implied by the order grid");

    NlarxModel best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        NlarxModel m = train_nlarx(series, grid[g], options.hidden_width, ntrain, options.max_iterations,
                                   derive_seed(seed, "nlarx-init", g), options.tolerance);
        const int begin       = ntrain < n ? ntrain : grid[g].max_lag();
        const Vector one_step = simulate_nlarx(m, series, n, SimulationMode::OneStep);
        m.one_step_rmse       = detail::rmse(series, one_step, begin, n);
        if (options.selection == OrderSelection::OneStep) {
            m.validation_rmse = m.one_step_rmse;
        } else {
            try {
                const Vector sim  = simulate_nlarx(m, series, n, SimulationMode::FreeRun, n);
                m.validation_rmse = detail::rmse(series, sim, begin, n);
            } catch (const NumericalError&) {
                m.validation_rmse = std::numeric_limits<double>::infinity();
            }
        }
        if (!std::isfinite(m.validation_rmse)) continue;
        if (m.validation_rmse < best_score) {
            best_score = m.validation_rmse;
            best       = std::move(m);
        }
    }
    if (!std::isfinite(best_score)) throw NumericalError("fit_nlarx: every candidate order diverged in simulation");
    return best;
}

} // namespace krod
