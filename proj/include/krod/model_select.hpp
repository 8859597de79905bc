#pragma once

// Rank selection over a finite grid of candidate triplets.
//
// Objective 1 (minimize):  E = ||u - u_k||_F over all space-time points.
// Objective 2 (maximize):  C = <u, u_k>^2 / (||u||^2 ||u_k||^2) on the
//                          flattened fields (squared cosine similarity).

#include "krod/core.hpp"
#include "krod/krod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace krod {

struct CandidateScore {
    int k             = 0;
    double error      = 0.0; // E
    double similarity = 0.0; // C
    std::size_t triplet_index = 0; // position of the scored triplet in the caller's list
};

enum class SelectionPolicy {
    Knee,         ///< closest front member to the normalized ideal point
    Parsimonious, ///< smallest rank whose similarity is within tolerance of the best
};

struct SelectionResult {
    std::vector<CandidateScore> front;
    CandidateScore chosen;
    std::vector<CandidateScore> all_scores;
    SelectionPolicy policy = SelectionPolicy::Parsimonious;
};

/// E and C of a triplet's reconstruction against `truth` (same shape).
inline CandidateScore score_fields(const Matrix& truth, const Matrix& approx, int k = 0)
{
    if (truth.rows() != approx.rows() || truth.cols() != approx.cols())
        throw ConfigError("score_candidate: truth is " + std::to_string(truth.rows()) + "x" +
                          std::to_string(truth.cols()) + " but reconstruction is " + std::to_string(approx.rows()) +
                          "x" + std::to_string(approx.cols()));
    const double tt = truth.squaredNorm();
    const double aa = approx.squaredNorm();
    if (!(tt > 0.0) || !(aa > 0.0)) throw NumericalError("score_candidate: similarity undefined for a zero field");
    const double ta = (truth.array() * approx.array()).sum();

    CandidateScore s;
    s.k          = k;
    s.error      = (truth - approx).norm();
    s.similarity = (ta / tt) * (ta / aa);
    return s;
}

inline CandidateScore score_candidate(const Matrix& truth, const KoopmanTriplet& triplet)
{
    return score_fields(truth, reconstruct(triplet), triplet.rank);
}

/// True when `a` dominates `b`: no worse in both objectives, strictly better in one.
inline bool dominates(const CandidateScore& a, const CandidateScore& b) noexcept
{
    const bool no_worse = a.error <= b.error && a.similarity >= b.similarity;
    const bool better   = a.error < b.error || a.similarity > b.similarity;
    return no_worse && better;
}

/// Non-dominated subset, ordered by k ascending (stable for equal k).
inline std::vector<CandidateScore> pareto_front(std::span<const CandidateScore> scores)
{
    if (scores.empty()) throw ConfigError("pareto_front: empty candidate list");
    std::vector<CandidateScore> front;
    for (const auto& candidate : scores) {
        const bool dominated = std::any_of(scores.begin(), scores.end(),
                                           [&](const CandidateScore& other) { return dominates(other, candidate); });
        if (!dominated) front.push_back(candidate);
    }
    std::stable_sort(front.begin(), front.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
    return front;
}

/// Knee rule: normalize E and C to [0, 1] over the front and take the member
/// nearest the ideal point (E_min, C_max). Ties go to the smaller rank.
inline CandidateScore select_twin(std::span<const CandidateScore> front)
{
    if (front.empty()) throw ConfigError("select_twin: empty front");
    double e_min = std::numeric_limits<double>::infinity(), e_max = -e_min;
    double c_min = e_min, c_max = -e_min;
    for (const auto& s : front) {
        e_min = std::min(e_min, s.error);
        e_max = std::max(e_max, s.error);
        c_min = std::min(c_min, s.similarity);
        c_max = std::max(c_max, s.similarity);
    }
    const double e_span = e_max - e_min;
    const double c_span = c_max - c_min;

    const CandidateScore* best = nullptr;
    double best_distance       = std::numeric_limits<double>::infinity();
    for (const auto& s : front) {
        const double de = e_span > 0.0 ? (s.error - e_min) / e_span : 0.0;
        const double dc = c_span > 0.0 ? (c_max - s.similarity) / c_span : 0.0;
        const double d  = std::hypot(de, dc);
        if (d < best_distance || (d == best_distance && best && s.k < best->k)) {
            best_distance = d;
            best          = &s;
        }
    }
    return *best;
}

/// Smallest-rank candidate whose similarity is within `tolerance` of the best
/// similarity on the front.
inline CandidateScore select_parsimonious(std::span<const CandidateScore> scores,
                                          std::span<const CandidateScore> front, double tolerance)
{
    if (front.empty() || scores.empty()) throw ConfigError("select_parsimonious: empty candidate list");
    double c_best = -std::numeric_limits<double>::infinity();
    for (const auto& s : front) c_best = std::max(c_best, s.similarity);

    const CandidateScore* best = nullptr;
    for (const auto& s : scores)
        if (s.similarity >= c_best - tolerance && (!best || s.k < best->k)) best = &s;
    return *best;
}

/// Front extraction plus the chosen twin under `policy`.
inline SelectionResult select_model(std::vector<CandidateScore> scores, SelectionPolicy policy,
                                    double similarity_tolerance = 1e-12)
{
    SelectionResult r;
    r.all_scores = std::move(scores);
    r.front      = pareto_front(r.all_scores);
    r.policy     = policy;
    r.chosen     = policy == SelectionPolicy::Knee ? select_twin(r.front)
                                                   : select_parsimonious(r.all_scores, r.front, similarity_tolerance);
    return r;
}

} // namespace krod
