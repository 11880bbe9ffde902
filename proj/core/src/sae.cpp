#include "malt/sae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace malt {

namespace {

Vector perLabelNorms(const TransferVectors& vectors) {
    Vector out(vectors.labels());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = norm2(vectors.a[j]);
    return out;
}

void requireUnit(std::span<const double> rdir) {
    if (std::abs(norm2(rdir) - 1.0) > 1e-9)
        throw std::invalid_argument("direction must have unit L2 norm");
}

} // namespace

TransferVectors transferVectorsRaw(const Model& model, std::span<const double> x,
                                   bool allowClamp) {
    Vector h = scores(model, x);
    std::vector<Vector> grads = allInputGradients(model, x);
    TransferVectors out;
    out.a.resize(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        double denom = h[j];
        if (std::abs(denom) < kScoreDenomEta) {
            if (!allowClamp) throw std::invalid_argument("near-boundary score");
            denom = denom >= 0.0 ? kScoreDenomEta : -kScoreDenomEta;
        }
        out.a[j] = scaled(grads[j], -1.0 / denom);
    }
    return out;
}

TransferVectors transferVectorsReg(const Model& model, std::span<const double> x,
                                   std::span<const double> y, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
    Vector h = scores(model, x);
    if (y.size() != h.size())
        throw std::invalid_argument("label dimension mismatch");
    std::vector<Vector> grads = allInputGradients(model, x);
    TransferVectors out;
    out.a.resize(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        double denom = std::max(std::exp(y[j] * h[j]), alpha);
        out.a[j] = scaled(grads[j], -y[j] / denom);
    }
    return out;
}

double directionalAttackability(const Model& model, std::span<const double> x,
                                std::span<const double> rdir, bool allowClamp) {
    requireUnit(rdir);
    TransferVectors vectors = transferVectorsRaw(model, x, allowClamp);
    double total = 0.0;
    for (const Vector& aj : vectors.a) total += std::max(dot(rdir, aj), 0.0);
    return total;
}

double directionalAttackabilityReg(const Model& model, std::span<const double> x,
                                   std::span<const double> rdir,
                                   std::span<const double> y, double alpha) {
    requireUnit(rdir);
    TransferVectors vectors = transferVectorsReg(model, x, y, alpha);
    double total = 0.0;
    for (const Vector& aj : vectors.a) total += std::max(dot(rdir, aj), 0.0);
    return total;
}

SaeScore saeGreedy(const TransferVectors& vectors, double q) {
    if (q != 2.0) throw std::invalid_argument("only the dual order q = 2 is supported");
    const std::size_t m = vectors.labels();
    if (m == 0) throw std::invalid_argument("saeGreedy: no labels");
    const std::size_t d = vectors.a[0].size();

    SaeScore score;
    score.perLabelTerms = perLabelNorms(vectors);

    Vector sum(d, 0.0);
    std::vector<bool> picked(m, false);
    double lastBest = 0.0;
    for (std::size_t round = 0; round < m; ++round) {
        double currentBest = -1.0;
        std::size_t bestLabel = m;
        for (std::size_t j = 0; j < m; ++j) {
            if (picked[j]) continue;
            Vector cand = added(sum, vectors.a[j]);
            double value = norm2(cand);
            if (value > currentBest) {
                currentBest = value;
                bestLabel = j;
            }
        }
        if (round == 0 && currentBest <= 0.0) break; // nothing improves from scratch
        if (currentBest < lastBest) break;
        picked[bestLabel] = true;
        score.subset.push_back(bestLabel);
        axpy(1.0, vectors.a[bestLabel], sum);
        lastBest = currentBest;
    }
    std::sort(score.subset.begin(), score.subset.end());
    // Recompute from the final subset so phi is free of accumulation drift.
    Vector fin(d, 0.0);
    for (std::size_t j : score.subset) axpy(1.0, vectors.a[j], fin);
    score.phi = norm2(fin);
    return score;
}

SaeScore saeBruteforce(const TransferVectors& vectors) {
    const std::size_t m = vectors.labels();
    if (m == 0) throw std::invalid_argument("saeBruteforce: no labels");
    if (m > 20) throw std::invalid_argument("enumeration cap");
    const std::size_t d = vectors.a[0].size();

    SaeScore score;
    score.perLabelTerms = perLabelNorms(vectors);

    double bestSq = 0.0;
    std::vector<std::size_t> bestSubset; // empty set scores 0
    Vector sum(d);
    std::vector<std::size_t> subset;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        std::fill(sum.begin(), sum.end(), 0.0);
        subset.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (mask & (1u << j)) {
                axpy(1.0, vectors.a[j], sum);
                subset.push_back(j);
            }
        }
        double sq = dot(sum, sum);
        if (sq > bestSq ||
            (sq == bestSq && std::lexicographical_compare(subset.begin(), subset.end(),
                                                          bestSubset.begin(),
                                                          bestSubset.end()))) {
            bestSq = sq;
            bestSubset = subset;
        }
    }
    score.subset = std::move(bestSubset);
    score.phi = std::sqrt(bestSq);
    return score;
}

SaeScore saeRegularizerValue(const Model& model, std::span<const double> x,
                             std::span<const double> y, double alpha) {
    return saeGreedy(transferVectorsReg(model, x, y, alpha));
}

SaeScore cWz(const Matrix& W, std::span<const double> y) {
    if (y.size() != W.rows) throw std::invalid_argument("cWz: label dimension mismatch");
    TransferVectors vectors;
    vectors.a.resize(W.rows);
    for (std::size_t j = 0; j < W.rows; ++j) vectors.a[j] = scaled(W.row(j), y[j]);
    return W.rows <= 20 ? saeBruteforce(vectors) : saeGreedy(vectors);
}

} // namespace malt
