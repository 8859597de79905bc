#pragma once

// Rank-k randomized SVD: Gaussian sketch, orthonormalized range, small SVD.

#include "krod/core.hpp"
#include "krod/rng.hpp"

#include <algorithm>
#include <string>

namespace krod {

struct RsvdFactors {
    Matrix U; // N_x x k, orthonormal columns
    Vector S; // k singular values, descending
    Matrix W; // N_t x k, orthonormal columns
    int k     = 0;
    Seed seed = 0;
    /// Number of sketch columns that were independent after all redraws.
    /// Less than k only when the input itself has rank < k; the missing
    /// directions are filled with orthonormal complements and carry zero
    /// singular values.
    int sketch_rank = 0;
};

/// Maximum number of fresh sketches drawn when the first one is rank deficient.
inline constexpr int kSketchRetries = 3;

namespace detail {

// Modified Gram-Schmidt with one reorthogonalization pass, in place.
// Returns the number of leading columns that were numerically independent;
// dependent columns are left as-is and reported through `independent`.
inline int orthonormalize_columns(Matrix& Q, std::vector<bool>& independent, double tolerance = 1e-13)
{
    const Eigen::Index k = Q.cols();
    independent.assign(static_cast<std::size_t>(k), false);
    int count = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double original = Q.col(j).norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                if (!independent[static_cast<std::size_t>(i)]) continue;
                Q.col(j) -= Q.col(i).dot(Q.col(j)) * Q.col(i);
            }
        }
        const double remaining = Q.col(j).norm();
        if (original > 0.0 && remaining > tolerance * original) {
            Q.col(j) /= remaining;
            independent[static_cast<std::size_t>(j)] = true;
            ++count;
        }
    }
    return count;
}

// Replaces dependent columns by random unit vectors orthogonal to the rest.
inline void complete_basis(Matrix& Q, const std::vector<bool>& independent, RandomStream& stream)
{
    std::vector<bool> accepted = independent;
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        if (accepted[static_cast<std::size_t>(j)]) continue;
        for (int attempt = 0; attempt < 16; ++attempt) {
            Vector v(Q.rows());
            for (Eigen::Index r = 0; r < Q.rows(); ++r) v(r) = stream.normal();
            const double original = v.norm();
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index i = 0; i < Q.cols(); ++i)
                    if (accepted[static_cast<std::size_t>(i)]) v -= Q.col(i).dot(v) * Q.col(i);
            const double remaining = v.norm();
            if (remaining > 1e-8 * original) {
                Q.col(j)                          = v / remaining;
                accepted[static_cast<std::size_t>(j)] = true;
                break;
            }
        }
        if (!accepted[static_cast<std::size_t>(j)]) throw NumericalError("rsvd: could not complete orthonormal basis");
    }
}

} // namespace detail

/// Rank-k randomized SVD of V0 (N_x x N_t) with a seeded Gaussian sketch.
///
/// Steps: M ~ N(0,1)^{N_t x k}; Q = V0 M; orthonormalize Q; P = Q^T V0;
/// P = T S W^T; U = Q T. If Q comes out rank deficient, up to
/// kSketchRetries fresh sketches are drawn from derived seeds.
inline RsvdFactors rsvd(const Matrix& V0, int k, Seed seed)
{
    const auto max_rank = std::min(V0.rows(), V0.cols());
    if (k < 2 || k > max_rank)
        throw ConfigError("rsvd: rank k = " + std::to_string(k) + " outside [2, " + std::to_string(max_rank) + "]");
    if (!V0.allFinite()) throw ConfigError("rsvd: input contains non-finite entries");

    Matrix Q;
    std::vector<bool> independent;
    int sketch_rank = 0;
    for (int attempt = 0; attempt <= kSketchRetries; ++attempt) {
        RandomStream stream(attempt == 0 ? seed : derive_seed(seed, "rsvd-retry", static_cast<std::uint64_t>(attempt)));
        const Matrix M = stream.normal_matrix(V0.cols(), k);
        Q              = V0 * M;
        sketch_rank    = detail::orthonormalize_columns(Q, independent);
        if (sketch_rank == k) break;
    }
    if (sketch_rank < k) {
        RandomStream filler(derive_seed(seed, "rsvd-complete"));
        detail::complete_basis(Q, independent, filler);
    }

    const Matrix P = Q.transpose() * V0;
    Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("rsvd: SVD of projected matrix failed");

    RsvdFactors f;
    f.U           = Q * svd.matrixU();
    f.S           = svd.singularValues();
    f.W           = svd.matrixV();
    f.k           = k;
    f.seed        = seed;
    f.sketch_rank = sketch_rank;
    return f;
}

} // namespace krod
