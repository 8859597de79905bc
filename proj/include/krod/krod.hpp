#pragma once

// Koopman randomized orthogonal decomposition (offline phase).
//
// For a target rank k:
//   V0 ~ U S W^T                      (randomized SVD)
//   Sop = U^T (V1 W S^{-1})           (reduced propagator)
//   G   = Sop^T Sop,  G X = X Lambda  (Gram eigenproblem, real symmetric PSD)
//   Phi = U X, columns normalized     (orthonormal Koopman modes)
//   A   = Phi^T V0                    (modal amplitudes)

#include "krod/core.hpp"
#include "krod/rsvd.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace krod {

struct KoopmanTriplet {
    Matrix modes;           // N_x x k, orthonormal columns
    Matrix amplitudes;      // k x N_t, row j is a_j(t_i)
    int rank = 0;
    Vector gram_eigenvalues; // descending, clipped at zero
    double min_gram_eigenvalue = 0.0; // before clipping
    Seed seed = 0;
};

enum class AmplitudeSource {
    Current, ///< A = Phi^T V0
    Shifted, ///< A = Phi^T V1 (the intermediate form of the derivation)
};

struct KrodOptions {
    /// sigma_k must exceed this fraction of sigma_1 before S^{-1} is formed.
    double sigma_tolerance = 1e-12;
    /// When true, singular values under the tolerance are dropped from the
    /// inverse (pseudo-inverse) instead of raising RankDeficiencyError.
    bool allow_rank_deficient = false;
    AmplitudeSource amplitudes = AmplitudeSource::Current;
};

/// V0 = columns 0..N_t-1, V1 = columns 1..N_t.
inline std::pair<Matrix, Matrix> split_snapshots(const Matrix& V)
{
    if (V.cols() < 2) throw ConfigError("split_snapshots: need at least 2 columns, got " + std::to_string(V.cols()));
    const Eigen::Index nt = V.cols() - 1;
    return {V.leftCols(nt), V.rightCols(nt)};
}

inline KoopmanTriplet krod_offline(const Matrix& V0, const Matrix& V1, int k, Seed seed, const KrodOptions& options = {})
{
    if (V0.rows() != V1.rows() || V0.cols() != V1.cols())
        throw ConfigError("krod_offline: V0 and V1 must have the same shape");
    if (k < 2 || k > V0.cols()) throw ConfigError("krod_offline: rank k = " + std::to_string(k) + " outside [2, N_t]");

    const RsvdFactors f = rsvd(V0, k, seed);

    const double sigma_max = f.S(0);
    const double cutoff    = options.sigma_tolerance * sigma_max;
    if (!(sigma_max > 0.0)) throw RankDeficiencyError("krod_offline: snapshot matrix is numerically zero");
    if (f.S(k - 1) <= cutoff && !options.allow_rank_deficient)
        throw RankDeficiencyError("krod_offline: sigma_" + std::to_string(k) + "/sigma_1 = " +
                                  detail::sci(f.S(k - 1) / sigma_max) + " is below " +
                                  detail::sci(options.sigma_tolerance) + "; lower the rank k");

    Vector inv_sigma(k);
    for (int j = 0; j < k; ++j) inv_sigma(j) = f.S(j) > cutoff ? 1.0 / f.S(j) : 0.0;

    const Matrix propagator = f.U.transpose() * ((V1 * f.W) * inv_sigma.asDiagonal());
    Matrix gram             = propagator.transpose() * propagator;
    gram                    = 0.5 * (gram + gram.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("krod_offline: Gram eigen-solver did not converge");

    KoopmanTriplet t;
    t.rank                = k;
    t.seed                = seed;
    t.min_gram_eigenvalue = eig.eigenvalues().minCoeff();
    t.gram_eigenvalues.resize(k);
    t.modes.resize(V0.rows(), k);

    // Eigen returns ascending eigenvalues; walk them backwards.
    for (int j = 0; j < k; ++j) {
        const int src          = k - 1 - j;
        t.gram_eigenvalues(j)  = std::max(0.0, eig.eigenvalues()(src));
        Vector phi             = f.U * eig.eigenvectors().col(src);
        phi /= phi.norm();
        Eigen::Index pivot = 0;
        phi.cwiseAbs().maxCoeff(&pivot);
        if (phi(pivot) < 0.0) phi = -phi;
        t.modes.col(j) = phi;
    }

    t.amplitudes = t.modes.transpose() * (options.amplitudes == AmplitudeSource::Current ? V0 : V1);
    return t;
}

/// Phi A: the rank-k approximation of the snapshot columns.
inline Matrix reconstruct(const KoopmanTriplet& t)
{
    if (t.modes.cols() != t.amplitudes.rows())
        throw ConfigError("reconstruct: modes have " + std::to_string(t.modes.cols()) + " columns but amplitudes have " +
                          std::to_string(t.amplitudes.rows()) + " rows");
    return t.modes * t.amplitudes;
}

} // namespace krod
