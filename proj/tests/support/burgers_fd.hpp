#pragma once

// Independent reference for u_t + (u^2/2)_x = nu u_xx: second-order central
// differences in space, Crank-Nicolson in time (Newton on each step), with
// a few backward-Euler half steps first to damp the non-smooth start.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fdref {

enum class Boundary { Dirichlet, Periodic };

struct Problem {
    double x_min = 0.0;
    double x_max = 2.0;
    int cells    = 4000; // grid spacing (x_max - x_min) / cells
    double nu    = 1e-2;
    double dt    = 1e-3;
    Boundary boundary = Boundary::Dirichlet;
    double left  = 0.0; // Dirichlet values
    double right = 0.0;
    std::function<double(double)> initial;
};

struct Solution {
    std::vector<double> x;
    std::vector<std::vector<double>> snapshots; // one per requested time
};

namespace detail {

// Thomas algorithm; a = sub, b = diag, c = super (a[0], c[n-1] unused).
inline void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                              std::vector<double>& d)
{
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

// Cyclic system: row 0 couples to the last unknown through a[0] and the
// last row to the first through c[n-1] (Sherman-Morrison correction).
inline void solve_cyclic(std::vector<double> a, std::vector<double> b, std::vector<double> c, std::vector<double>& d)
{
    const std::size_t n = b.size();
    const double alpha  = c[n - 1]; // A(n-1, 0)
    const double beta   = a[0];     // A(0, n-1)
    const double gamma  = -b[0];
    std::vector<double> bb = b;
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    std::vector<double> x = d;
    solve_tridiagonal(a, bb, c, x);
    std::vector<double> u(n, 0.0);
    u[0]     = gamma;
    u[n - 1] = alpha;
    std::vector<double> z = u;
    solve_tridiagonal(a, bb, c, z);
    const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - fact * z[i];
}

} // namespace detail

class Solver {
public:
    explicit Solver(Problem p) : p_(std::move(p))
    {
        h_ = (p_.x_max - p_.x_min) / p_.cells;
        const int points = p_.boundary == Boundary::Periodic ? p_.cells : p_.cells + 1;
        x_.resize(static_cast<std::size_t>(points));
        u_.resize(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) {
            x_[i] = p_.x_min + h_ * static_cast<double>(i);
            u_[i] = p_.initial(x_[i]);
        }
        if (p_.boundary == Boundary::Dirichlet) {
            u_.front() = p_.left;
            u_.back()  = p_.right;
        }
    }

    [[nodiscard]] const std::vector<double>& x() const { return x_; }
    [[nodiscard]] const std::vector<double>& u() const { return u_; }
    [[nodiscard]] double spacing() const { return h_; }

    /// Advances to each time in `times` (ascending) and records the field.
    Solution run(const std::vector<double>& times, int startup_steps = 4)
    {
        Solution s;
        s.x       = x_;
        double t  = 0.0;
        int taken = 0;
        for (double target : times) {
            while (t < target - 1e-12) {
                double step = std::min(p_.dt, target - t);
                if (taken < startup_steps) {
                    // two backward-Euler half steps replace one CN step
                    advance(0.5 * step, 1.0);
                    advance(0.5 * step, 1.0);
                } else {
                    advance(step, 0.5);
                }
                t += step;
                ++taken;
            }
            s.snapshots.push_back(u_);
        }
        return s;
    }

private:
    // theta-scheme step: w - u - dt [theta F(w) + (1 - theta) F(u)] = 0.
    void advance(double dt, double theta)
    {
        const std::size_t n = u_.size();
        const bool periodic = p_.boundary == Boundary::Periodic;
        const std::vector<double> old = u_;
        std::vector<double> f_old(n);
        rhs(old, f_old);
        std::vector<double> w = old;
        std::vector<double> f(n), a(n), b(n), c(n), r(n);
        const double diff = p_.nu / (h_ * h_);
        for (int it = 0; it < 20; ++it) {
            rhs(w, f);
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = -(w[i] - old[i] - dt * (theta * f[i] + (1.0 - theta) * f_old[i]));
                const double wl = periodic ? w[(i + n - 1) % n] : (i > 0 ? w[i - 1] : 0.0);
                const double wr = periodic ? w[(i + 1) % n] : (i + 1 < n ? w[i + 1] : 0.0);
                // dF_i/dw_{i-1}, dF_i/dw_i, dF_i/dw_{i+1}
                a[i] = -dt * theta * (wl / (2.0 * h_) + diff);
                b[i] = 1.0 + dt * theta * 2.0 * diff;
                c[i] = -dt * theta * (-wr / (2.0 * h_) + diff);
            }
            if (!periodic) {
                // boundary rows pin the Dirichlet values
                r[0] = 0.0;
                r[n - 1] = 0.0;
                a[0] = c[0] = 0.0;
                b[0] = 1.0;
                a[n - 1] = c[n - 1] = 0.0;
                b[n - 1] = 1.0;
                detail::solve_tridiagonal(a, b, c, r);
            } else {
                detail::solve_cyclic(a, b, c, r);
            }
            for (std::size_t i = 0; i < n; ++i) {
                w[i] += r[i];
                norm = std::max(norm, std::abs(r[i]));
            }
            if (norm < 1e-13) break;
        }
        u_ = w;
    }

    void rhs(const std::vector<double>& w, std::vector<double>& f) const
    {
        const std::size_t n = w.size();
        const bool periodic = p_.boundary == Boundary::Periodic;
        for (std::size_t i = 0; i < n; ++i) {
            if (!periodic && (i == 0 || i + 1 == n)) {
                f[i] = 0.0;
                continue;
            }
            const double wl = w[periodic ? (i + n - 1) % n : i - 1];
            const double wr = w[periodic ? (i + 1) % n : i + 1];
            f[i] = -(wr * wr - wl * wl) / (4.0 * h_) + p_.nu * (wr - 2.0 * w[i] + wl) / (h_ * h_);
        }
    }

    Problem p_;
    double h_ = 0.0;
    std::vector<double> x_;
    std::vector<double> u_;
};

} // namespace fdref
