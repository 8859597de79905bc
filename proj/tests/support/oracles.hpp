#pragma once

// Shared fixtures for the unit tests and the acceptance driver.

#include "krod/burgers.hpp"
#include "krod/rng.hpp"
#include "support/burgers_fd.hpp"

#include <cmath>
#include <vector>

namespace oracle {

/// Finite-difference counterpart of an experiment. Grid spacing 0.02 / 40
/// so every point of the 101-point grid on [0, 2] is a solver node.
inline fdref::Problem fd_problem(const krod::ExperimentSpec& spec, int refine = 40, double dt = 1e-3)
{
    fdref::Problem p;
    p.nu = spec.nu;
    p.dt = dt;
    const double coarse = spec.length / (spec.nx - 1);
    switch (spec.experiment) {
    case krod::Experiment::Sine:
        p.x_min    = 0.0;
        p.x_max    = spec.length;
        p.boundary = fdref::Boundary::Dirichlet;
        p.initial  = [](double x) { return -std::sin(M_PI * x); };
        break;
    case krod::Experiment::CosSquared:
        p.x_min    = 0.0;
        p.x_max    = spec.length;
        p.boundary = fdref::Boundary::Periodic;
        p.initial  = [](double x) {
            const double c = std::cos(1.5 * M_PI * x);
            return -c * c;
        };
        break;
    case krod::Experiment::Riemann: {
        // wide enough that the far field stays at the plateau values
        p.x_min    = -4.0;
        p.x_max    = 6.0;
        p.boundary = fdref::Boundary::Dirichlet;
        p.left     = spec.u_left;
        p.right    = spec.u_right;
        const double ul = spec.u_left, ur = spec.u_right;
        p.initial = [ul, ur](double x) {
            if (std::abs(x) < 1e-12) return 0.5 * (ul + ur);
            return x < 0.0 ? ul : ur;
        };
        break;
    }
    }
    p.cells = static_cast<int>(std::lround((p.x_max - p.x_min) / coarse)) * refine;
    return p;
}

/// L-infinity gap between exact_solution and the finite-difference solve on
/// the experiment's grid, one entry per time.
inline std::vector<double> fd_gaps(const krod::ExperimentSpec& spec, const std::vector<double>& times,
                                   int refine = 40, double dt = 1e-3)
{
    const auto problem = fd_problem(spec, refine, dt);
    fdref::Solver solver(problem);
    const auto sol  = solver.run(times);
    const auto rule = krod::hermite_rule(spec.quad_order);
    const double h  = solver.spacing();
    std::vector<double> gaps;
    for (std::size_t k = 0; k < times.size(); ++k) {
        double gap = 0.0;
        for (int j = 0; j < spec.nx; ++j) {
            const double x = spec.length * j / (spec.nx - 1);
            const auto idx = static_cast<std::size_t>(std::lround((x - problem.x_min) / h));
            const double fd = sol.snapshots[k][idx % sol.x.size()];
            gap = std::max(gap, std::abs(fd - krod::exact_solution(spec, x, times[k], rule)));
        }
        gaps.push_back(gap);
    }
    return gaps;
}

/// m x n matrix of exact rank r with singular values spread over [1, 1e3).
inline krod::Matrix random_rank_matrix(int m, int n, int r, krod::Seed seed, krod::Vector* singular_values = nullptr)
{
    krod::RandomStream s(seed);
    krod::Matrix G = s.normal_matrix(m, r);
    krod::Matrix H = s.normal_matrix(n, r);
    Eigen::HouseholderQR<krod::Matrix> qg(G), qh(H);
    const krod::Matrix U = qg.householderQ() * krod::Matrix::Identity(m, r);
    const krod::Matrix V = qh.householderQ() * krod::Matrix::Identity(n, r);
    krod::Vector sv(r);
    for (int i = 0; i < r; ++i) sv(i) = std::pow(10.0, 3.0 * (1.0 - static_cast<double>(i) / r)) * (1.0 + s.uniform());
    std::sort(sv.data(), sv.data() + r, std::greater<>());
    if (singular_values) *singular_values = sv;
    return U * sv.asDiagonal() * V.transpose();
}

} // namespace oracle
