#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "malt/model.hpp"

namespace malt {

/// Per-instance transferability vectors a_j, one per label.
///
/// Two scalings exist and are deliberately kept apart:
///  - raw:        a_j = -grad h_j(x) / h_j(x). Label-free; this is what the
///                attackability score uses.
///  - regularized: a_j = -y_j grad h_j(x) / max(e^{y_j h_j(x)}, alpha).
///                Label-aware; this is what robust training penalizes, so a
///                confidently correct label contributes almost nothing while
///                a confidently wrong one is penalized exponentially.
/// The raw form ignores ground-truth labels while the regularized form
/// weights by them; scores produced by the two are not interchangeable.
struct TransferVectors {
    std::vector<Vector> a;

    std::size_t labels() const { return a.size(); }
};

struct SaeScore {
    double phi = 0.0;
    std::vector<std::size_t> subset; // selected label indices, ascending
    Vector perLabelTerms;            // ||a_j||_2 per label
};

inline constexpr double kScoreDenomEta = 1e-6; // raw denominator clamp
inline constexpr double kDefaultAlpha = 0.01;

/// Raw vectors. When |h_j(x)| < eta: throws unless allowClamp, in which case
/// the denominator is clamped to +-eta (sign preserved, +eta at exactly 0).
TransferVectors transferVectorsRaw(const Model& model, std::span<const double> x,
                                   bool allowClamp);

/// Regularized vectors (alpha > 0).
TransferVectors transferVectorsReg(const Model& model, std::span<const double> x,
                                   std::span<const double> y, double alpha);

/// Attackability of the model at x along the unit direction rdir:
/// sum_j max(-rdir . grad h_j(x) / h_j(x), 0). Requires ||rdir||_2 = 1
/// within 1e-9.
double directionalAttackability(const Model& model, std::span<const double> x,
                                std::span<const double> rdir, bool allowClamp = false);

/// Label-aware variant with the regularizer scaling.
double directionalAttackabilityReg(const Model& model, std::span<const double> x,
                                   std::span<const double> rdir,
                                   std::span<const double> y, double alpha);

/// Greedy subset solver: grow S by the label maximizing ||sum_{i in S} a_i +
/// a_j||_2, stop when the best candidate is worse than the current value or S
/// is full. Ties break toward the lowest label index. If no candidate has a
/// positive norm at the first step, returns phi = 0 with an empty subset.
/// Only the dual order q = 2 is supported.
SaeScore saeGreedy(const TransferVectors& vectors, double q = 2.0);

/// Exact maximizer of ||sum_{j in S} a_j||_2 over all 2^m subsets (m <= 20).
/// Ties break toward the lexicographically smallest subset.
SaeScore saeBruteforce(const TransferVectors& vectors);

/// Regularizer score phi-hat: greedy subset value on the regularized vectors.
SaeScore saeRegularizerValue(const Model& model, std::span<const double> x,
                             std::span<const double> y, double alpha);

/// Subset-max norm of signed weight rows: max_S ||sum_{j in S} y_j w_j||_2.
/// Exact enumeration for m <= 20, greedy beyond that.
SaeScore cWz(const Matrix& W, std::span<const double> y);

} // namespace malt
