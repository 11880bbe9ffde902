#include "malt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "malt/errors.hpp"

namespace malt {

EvalReport f1Scores(const Matrix& pred, const Matrix& truth) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw std::invalid_argument("f1Scores: shape mismatch");
    const std::size_t n = pred.rows;
    const std::size_t m = pred.cols;

    EvalReport report;
    report.perLabelF1.assign(m, 0.0);
    report.support.assign(m, 0);

    std::size_t tpAll = 0, fpAll = 0, fnAll = 0;
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool p = pred(i, j) > 0;
            bool t = truth(i, j) > 0;
            if (t) ++report.support[j];
            if (p && t) ++tp;
            else if (p && !t) ++fp;
            else if (!p && t) ++fn;
        }
        std::size_t denom = 2 * tp + fp + fn;
        report.perLabelF1[j] = denom == 0 ? 0.0 : 2.0 * tp / static_cast<double>(denom);
        tpAll += tp;
        fpAll += fp;
        fnAll += fn;
    }
    std::size_t denomAll = 2 * tpAll + fpAll + fnAll;
    report.microF1 = denomAll == 0 ? 0.0 : 2.0 * tpAll / static_cast<double>(denomAll);
    report.macroF1 =
        std::accumulate(report.perLabelF1.begin(), report.perLabelF1.end(), 0.0) /
        static_cast<double>(m);
    return report;
}

namespace {

// Average ranks (1-based), ties share the mean rank of their block.
Vector averageRanks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vector ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const auto n = static_cast<double>(a.size());
    double meanA = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double meanB = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cov = 0.0, varA = 0.0, varB = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - meanA;
        double db = b[i] - meanB;
        cov += da * db;
        varA += da * da;
        varB += db * db;
    }
    if (varA == 0.0 || varB == 0.0)
        throw std::invalid_argument("undefined correlation");
    return cov / std::sqrt(varA * varB);
}

// Regularized incomplete beta via Lentz continued fraction.
double betacf(double a, double b, double x) {
    constexpr int maxIter = 200;
    constexpr double eps = 3e-14;
    constexpr double fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int it = 1; it <= maxIter; ++it) {
        int m2 = 2 * it;
        double aa = it * (b - it) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + it) * (qab + it) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NumericError("incomplete beta did not converge");
}

double incompleteBeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace

SpearmanResult spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 3)
        throw std::invalid_argument("spearman: need at least 3 points");

    Vector ra = averageRanks(a);
    Vector rb = averageRanks(b);
    SpearmanResult result;
    result.rho = pearson(ra, rb);

    const auto n = static_cast<double>(a.size());
    double r2 = result.rho * result.rho;
    if (r2 >= 1.0) {
        result.pApprox = 0.0;
        return result;
    }
    // Two-sided p from t = rho sqrt((n-2)/(1-rho^2)) with n-2 dof.
    double t2 = r2 * (n - 2.0) / (1.0 - r2);
    double nu = n - 2.0;
    result.pApprox = incompleteBeta(nu / 2.0, 0.5, nu / (nu + t2));
    return result;
}

double phiAlign(const Matrix& W) {
    const std::size_t m = W.rows;
    if (m == 0) throw std::invalid_argument("phiAlign: empty matrix");
    for (std::size_t j = 0; j < m; ++j)
        if (norm2(W.row(j)) == 0.0)
            throw std::invalid_argument("phiAlign: zero weight row");
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
            total += std::abs(cosine(W.row(j), W.row(k)));
    return total / (static_cast<double>(m) * static_cast<double>(m));
}

} // namespace malt
