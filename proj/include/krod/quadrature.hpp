#pragma once

// Gauss-Hermite quadrature for integrals of the form  int f(z) exp(-z^2) dz.

#include "krod/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace krod {

inline constexpr int kMaxHermiteOrder = 200;

struct QuadratureRule {
    std::vector<double> nodes;   // ascending roots of H_n
    std::vector<double> weights; // positive, sum to sqrt(pi)

    [[nodiscard]] int order() const noexcept { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Orthonormal Hermite recurrence evaluated at x. Returns {p_n(x), p_{n-1}(x)}.
inline std::pair<double, double> orthonormal_hermite(int n, double x) noexcept
{
    double prev = 0.0;
    double curr = 1.0 / std::pow(std::numbers::pi, 0.25);
    for (int j = 0; j < n; ++j) {
        const double next = x * std::sqrt(2.0 / (j + 1)) * curr - std::sqrt(static_cast<double>(j) / (j + 1)) * prev;
        prev = curr;
        curr = next;
    }
    return {curr, prev};
}

} // namespace detail

/// Nodes and weights of the n-point Gauss-Hermite rule.
///
/// Initial nodes come from the eigenvalues of the symmetric tridiagonal Jacobi
/// matrix (off-diagonal sqrt(i/2)). Each positive node is then polished with
/// Newton steps on the orthonormal recurrence, and weights are evaluated from
///     w_i = 2^(n-1) n! sqrt(pi) / (n^2 H_{n-1}(x_i)^2),
/// written in orthonormal form as 1 / (n p_{n-1}(x_i)^2) so nothing overflows.
/// Negative nodes are mirrored, so the rule is exactly symmetric.
inline QuadratureRule hermite_rule(int n, int max_order = kMaxHermiteOrder)
{
    if (n < 1) throw ConfigError("hermite_rule: order must be >= 1, got " + std::to_string(n));
    if (n > max_order)
        throw ConfigError("hermite_rule: order " + std::to_string(n) + " exceeds certified maximum " +
                          std::to_string(max_order));

    std::vector<double> positive;
    if (n > 1) {
        Vector diag    = Vector::Zero(n);
        Vector subdiag = Vector(n - 1);
        for (int i = 1; i < n; ++i) subdiag(i - 1) = std::sqrt(i / 2.0);
        Eigen::SelfAdjointEigenSolver<Matrix> solver;
        solver.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw NumericalError("hermite_rule: Jacobi eigenvalue solve failed");
        const Vector& ev = solver.eigenvalues(); // ascending
        for (int i = n / 2 + (n % 2); i < n; ++i) positive.push_back(std::abs(ev(i)));
    }

    auto polish = [n](double x) {
        for (int it = 0; it < 8; ++it) {
            const auto [pn, pn1] = detail::orthonormal_hermite(n, x);
            const double dp      = std::sqrt(2.0 * n) * pn1;
            const double step    = pn / dp;
            x -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        return x;
    };
    auto weight = [n](double x) {
        const double pn1 = detail::orthonormal_hermite(n, x).second;
        return 1.0 / (n * pn1 * pn1);
    };

    for (double& x : positive) x = polish(x);

    QuadratureRule rule;
    rule.nodes.reserve(n);
    rule.weights.reserve(n);
    for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
        rule.nodes.push_back(-*it);
        rule.weights.push_back(weight(*it));
    }
    if (n % 2 == 1) {
        rule.nodes.push_back(0.0);
        rule.weights.push_back(weight(0.0));
    }
    for (double x : positive) {
        rule.nodes.push_back(x);
        rule.weights.push_back(weight(x));
    }
    return rule;
}

/// Sum of w_i f(x_i). Non-finite evaluations are reported with the node index.
template <typename F>
double gh_integrate(F&& f, const QuadratureRule& rule)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double value = f(rule.nodes[i]);
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg << "gh_integrate: non-finite integrand " << value << " at node " << i << " (z = " << rule.nodes[i]
                << ")";
            throw NumericalError(msg.str());
        }
        sum += rule.weights[i] * value;
    }
    return sum;
}

} // namespace krod
