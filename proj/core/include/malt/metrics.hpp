#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "malt/linalg.hpp"

namespace malt {

struct EvalReport {
    double microF1 = 0.0;
    double macroF1 = 0.0;
    Vector perLabelF1;                // one per label
    std::vector<std::size_t> support; // positives in truth, per label
};

/// Micro and macro F1 over sign matrices (+1 is the positive class). A label
/// with an empty F1 denominator (no true or predicted positives) scores 0.
EvalReport f1Scores(const Matrix& pred, const Matrix& truth);

struct SpearmanResult {
    double rho = 0.0;
    double pApprox = 1.0; // two-sided, Student-t approximation
};

/// Rank correlation with average ranks for ties. Requires length >= 3 and
/// nonconstant inputs.
SpearmanResult spearman(std::span<const double> a, std::span<const double> b);

/// Mean absolute pairwise cosine of weight rows, (1/m^2) sum_{j,k} |cos|,
/// diagonal included. Rows must be nonzero.
double phiAlign(const Matrix& W);

} // namespace malt
