#pragma once

// Ground-truth snapshots of the viscous Burgers equation
//     u_t + (u^2 / 2)_x = nu u_xx
// from its Cole-Hopf representation
//     u(x, t) = int (x - xi)/t phi0(xi) G dxi / int phi0(xi) G dxi,
//     G = exp(-(x - xi)^2 / (4 nu t)),  phi0 = exp(-(1/2nu) int_0^xi u0).
// With xi = x - z sqrt(4 nu t) both integrals become Gauss-Hermite integrals.

#include "krod/core.hpp"
#include "krod/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace krod {

enum class Experiment { Sine, Riemann, CosSquared };

/// How the two-plateau Riemann integrals are evaluated.
enum class RiemannMethod {
    ClosedForm, ///< each half-line integral in terms of erfc (default)
    Quadrature, ///< Gauss-Hermite over the discontinuous integrand
};

struct ExperimentSpec {
    Experiment experiment = Experiment::Sine;
    double nu             = 1e-2;
    double length         = 2.0;
    double final_time     = 3.0;
    int nx                = 101;
    int nt                = 300;
    int quad_order        = 100;
    double u_left         = 0.1;
    double u_right        = 0.5;
    RiemannMethod riemann = RiemannMethod::ClosedForm;

    [[nodiscard]] double dt() const noexcept { return final_time / nt; }
    [[nodiscard]] double dx() const noexcept { return length / (nx - 1); }

    void validate() const
    {
        detail::require(std::isfinite(nu) && nu > 0.0, "experiment: nu must be > 0");
        detail::require(std::isfinite(length) && length > 0.0, "experiment: L must be > 0");
        detail::require(std::isfinite(final_time) && final_time > 0.0, "experiment: T must be > 0");
        detail::require(nx >= 2, "experiment: nx must be >= 2");
        detail::require(nt >= 2, "experiment: nt must be >= 2");
        detail::require(quad_order >= 1 && quad_order <= kMaxHermiteOrder,
                        "experiment: quad_order must be in [1, " + std::to_string(kMaxHermiteOrder) + "]");
        detail::require(std::isfinite(u_left) && std::isfinite(u_right), "experiment: u_left/u_right must be finite");
    }
};

inline std::string_view to_string(Experiment e) noexcept
{
    switch (e) {
    case Experiment::Sine: return "sine";
    case Experiment::Riemann: return "riemann";
    case Experiment::CosSquared: return "cos_squared";
    }
    return "unknown";
}

inline Experiment experiment_from_string(std::string_view name)
{
    if (name == "sine" || name == "exp1") return Experiment::Sine;
    if (name == "riemann" || name == "exp2") return Experiment::Riemann;
    if (name == "cos_squared" || name == "exp3") return Experiment::CosSquared;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

/// Uniformly sampled space-time field; column i holds u(., t0 + i dt).
struct SnapshotSet {
    Matrix values;
    std::vector<double> x;
    double dt     = 0.0;
    double t0     = 0.0;
    double length = 0.0;

    [[nodiscard]] Eigen::Index nx() const noexcept { return values.rows(); }
    [[nodiscard]] Eigen::Index columns() const noexcept { return values.cols(); }
    [[nodiscard]] double time(Eigen::Index i) const noexcept { return t0 + static_cast<double>(i) * dt; }
};

/// Initial profile u0(x). The Riemann jump takes the left state at x = 0.
inline double initial_condition(const ExperimentSpec& spec, double x) noexcept
{
    switch (spec.experiment) {
    case Experiment::Sine: return -std::sin(std::numbers::pi * x);
    case Experiment::Riemann: return x <= 0.0 ? spec.u_left : spec.u_right;
    case Experiment::CosSquared: {
        const double c = std::cos(1.5 * std::numbers::pi * x);
        return -c * c;
    }
    }
    return 0.0;
}

namespace detail {

// log of -(1/2nu) int_0^xi u0, i.e. log phi0(xi) up to an additive constant.
inline double log_phi0(const ExperimentSpec& spec, double xi) noexcept
{
    const double nu = spec.nu;
    switch (spec.experiment) {
    case Experiment::Sine: return -std::cos(std::numbers::pi * xi) / (2.0 * nu * std::numbers::pi);
    case Experiment::Riemann: return -(xi <= 0.0 ? spec.u_left : spec.u_right) * xi / (2.0 * nu);
    case Experiment::CosSquared:
        return (std::sin(3.0 * std::numbers::pi * xi) / (3.0 * std::numbers::pi) + xi) / (4.0 * nu);
    }
    return 0.0;
}

/// log(erfc(y)) without underflow for large positive y.
inline double log_erfc(double y) noexcept
{
    if (y < 25.0) return std::log(std::erfc(y));
    const double inv = 1.0 / (2.0 * y * y);
    // asymptotic series: 1 - 1/(2y^2) + 3/(4y^4) - 15/(8y^6) + 105/(16y^8) - 945/(32y^10)
    const double series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv * (1.0 - 9.0 * inv))));
    return -y * y - std::log(y * std::sqrt(std::numbers::pi)) + std::log(series);
}

/// exp(-y^2) / (sqrt(pi) erfc(y)), stable for all y.
inline double erfc_hazard(double y) noexcept
{
    return std::exp(-y * y - log_erfc(y)) / std::sqrt(std::numbers::pi);
}

inline std::string location(double x, double t)
{
    std::ostringstream s;
    s << "x = " << x << ", t = " << t;
    return s.str();
}

// Ratio of the two Gauss-Hermite sums with the largest exponent factored out.
inline double cole_hopf_quadrature(const ExperimentSpec& spec, double x, double t, const QuadratureRule& rule)
{
    const double s = std::sqrt(4.0 * spec.nu * t);
    const std::size_t n = rule.nodes.size();
    std::vector<double> log_terms(n);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        log_terms[i] = std::log(rule.weights[i]) + log_phi0(spec, x - rule.nodes[i] * s);
        if (!std::isfinite(log_terms[i]))
            throw NumericalError("exact_solution: non-finite exponent at node " + std::to_string(i) + " (" +
                                 location(x, t) + ")");
        peak = std::max(peak, log_terms[i]);
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(log_terms[i] - peak);
        num += 4.0 * spec.nu * rule.nodes[i] * e;
        den += s * e;
    }
    if (!(std::abs(den) >= 1e-300))
        throw NumericalError("exact_solution: denominator underflow (" + location(x, t) + ")");
    return num / den;
}

// Two-plateau Riemann data: each half-line integral is a shifted Gaussian,
// so numerator and denominator reduce to erfc terms.
inline double riemann_closed_form(const ExperimentSpec& spec, double x, double t)
{
    const double nu = spec.nu;
    const double s  = std::sqrt(4.0 * nu * t);
    const double c  = x / s; // xi <= 0  <=>  z >= c

    const double shift_l = spec.u_left * s / (4.0 * nu);
    const double shift_r = spec.u_right * s / (4.0 * nu);
    const double y_l     = c - shift_l;
    const double y_r     = c - shift_r;

    const double log_l = -spec.u_left * x / (2.0 * nu) + shift_l * shift_l + log_erfc(y_l);
    const double log_r = -spec.u_right * x / (2.0 * nu) + shift_r * shift_r + log_erfc(-y_r);
    const double peak  = std::max(log_l, log_r);
    const double w_l   = std::exp(log_l - peak);
    const double w_r   = std::exp(log_r - peak);

    const double mean_l = shift_l + erfc_hazard(y_l);
    const double mean_r = shift_r - erfc_hazard(-y_r);
    const double den    = w_l + w_r;
    if (!(den >= 1e-300)) throw NumericalError("exact_solution: denominator underflow (" + location(x, t) + ")");
    return 4.0 * nu / s * (w_l * mean_l + w_r * mean_r) / den;
}

} // namespace detail

/// Exact solution u(x, t) for t > 0 using a prebuilt rule of order spec.quad_order.
inline double exact_solution(const ExperimentSpec& spec, double x, double t, const QuadratureRule& rule)
{
    if (!(t > 0.0)) throw ConfigError("exact_solution: t must be > 0 (got " + std::to_string(t) + ")");
    double u = 0.0;
    if (spec.experiment == Experiment::Riemann && spec.riemann == RiemannMethod::ClosedForm)
        u = detail::riemann_closed_form(spec, x, t);
    else
        u = detail::cole_hopf_quadrature(spec, x, t, rule);
    if (!std::isfinite(u)) throw NumericalError("exact_solution: non-finite value (" + detail::location(x, t) + ")");
    return u;
}

inline double exact_solution(const ExperimentSpec& spec, double x, double t)
{
    spec.validate();
    return exact_solution(spec, x, t, hermite_rule(spec.quad_order));
}

/// Uniform grid over [0, L] with nx points.
inline std::vector<double> uniform_grid(double length, int nx)
{
    std::vector<double> x(static_cast<std::size_t>(nx));
    for (int j = 0; j < nx; ++j) x[j] = length * j / (nx - 1);
    return x;
}

/// N_x by (N_t + 1) snapshot matrix; column 0 is the initial profile.
inline SnapshotSet generate_snapshots(const ExperimentSpec& spec)
{
    spec.validate();
    const QuadratureRule rule = hermite_rule(spec.quad_order);

    SnapshotSet set;
    set.x      = uniform_grid(spec.length, spec.nx);
    set.dt     = spec.dt();
    set.t0     = 0.0;
    set.length = spec.length;
    set.values.resize(spec.nx, spec.nt + 1);

    for (int j = 0; j < spec.nx; ++j) set.values(j, 0) = initial_condition(spec, set.x[j]);
    for (int i = 1; i <= spec.nt; ++i) {
        const double t = i * set.dt;
        for (int j = 0; j < spec.nx; ++j) {
            try {
                set.values(j, i) = exact_solution(spec, set.x[j], t, rule);
            } catch (const NumericalError& e) {
                throw NumericalError("generate_snapshots at (row " + std::to_string(j) + ", column " +
                                     std::to_string(i) + "): " + e.what());
            }
        }
    }
    return set;
}

/// The three built-in experiments (nu = 0.01, L = 2, T = 3, 101 x 300 grid).
inline ExperimentSpec preset_experiment(std::string_view name)
{
    ExperimentSpec spec;
    spec.experiment = experiment_from_string(name);
    return spec;
}

} // namespace krod
