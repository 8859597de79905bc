#pragma once

// Qualitative diagnostics of a twin against the reference field.

#include "krod/core.hpp"

#include <cmath>
#include <string>

namespace krod {

struct EvalReport {
    Matrix mac;         // N_DTM x N_DTM
    double pearson = 0.0;
    double mae     = 0.0;
    Matrix local_error; // N_x x N_t
};

namespace detail {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* who)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError(std::string(who) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}

} // namespace detail

/// Modal assurance criterion |<phi_i, phi_j>|^2 / (<phi_i, phi_i><phi_j, phi_j>).
inline Matrix mac_matrix(const Matrix& modes)
{
    const Vector norms2 = modes.colwise().squaredNorm().transpose();
    for (Eigen::Index j = 0; j < norms2.size(); ++j)
        if (!(norms2(j) > 0.0)) throw ConfigError("mac_matrix: mode " + std::to_string(j) + " is zero");
    const Matrix gram = modes.transpose() * modes;
    Matrix mac(gram.rows(), gram.cols());
    for (Eigen::Index j = 0; j < gram.cols(); ++j)
        for (Eigen::Index i = 0; i < gram.rows(); ++i)
            mac(i, j) = (gram(i, j) / norms2(i)) * (gram(i, j) / norms2(j));
    return mac;
}

/// Pearson correlation of the two fields flattened space-fastest within each time.
inline double pearson(const Matrix& truth, const Matrix& prediction)
{
    detail::require_same_shape(truth, prediction, "pearson");
    const auto a  = truth.reshaped();
    const auto b  = prediction.reshaped();
    const double n = static_cast<double>(a.size());
    const double mean_a = a.sum() / n;
    const double mean_b = b.sum() / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double da = a(i) - mean_a;
        const double db = b(i) - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw NumericalError("pearson: correlation undefined for a constant field");
    return sab / (std::sqrt(saa) * std::sqrt(sbb));
}

inline Matrix local_error(const Matrix& truth, const Matrix& prediction)
{
    detail::require_same_shape(truth, prediction, "local_error");
    return (truth - prediction).cwiseAbs();
}

inline double mae(const Matrix& truth, const Matrix& prediction)
{
    return local_error(truth, prediction).mean();
}

inline EvalReport evaluate(const Matrix& truth, const Matrix& prediction, const Matrix& modes)
{
    EvalReport r;
    r.mac         = mac_matrix(modes);
    r.pearson     = pearson(truth, prediction);
    r.local_error = local_error(truth, prediction);
    r.mae         = r.local_error.mean();
    return r;
}

} // namespace krod
