#include "malt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "malt/errors.hpp"

namespace malt {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols)
        throw std::invalid_argument("matrix data size does not match rows*cols");
}

Vector Matrix::rowCopy(std::size_t i) const {
    auto r = row(i);
    return Vector(r.begin(), r.end());
}

Matrix Matrix::transposed() const {
    Matrix T(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            T(j, i) = (*this)(i, j);
    return T;
}

double dot(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double normInf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm(std::span<const double> v, double p) {
    if (p == 1.0) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    if (p == 2.0) return norm2(v);
    if (p == std::numeric_limits<double>::infinity()) return normInf(v);
    throw std::invalid_argument("unsupported norm order");
}

double cosine(std::span<const double> u, std::span<const double> v) {
    double nu = norm2(u);
    double nv = norm2(v);
    if (nu == 0.0 || nv == 0.0)
        throw std::invalid_argument("undefined cosine");
    double c = dot(u, v) / (nu * nv);
    return std::clamp(c, -1.0, 1.0);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector scaled(std::span<const double> v, double a) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
    return out;
}

Vector added(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("added: dimension mismatch");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + v[i];
    return out;
}

Vector subtracted(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("subtracted: dimension mismatch");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - v[i];
    return out;
}

Vector matVec(const Matrix& A, std::span<const double> x) {
    if (x.size() != A.cols)
        throw std::invalid_argument("matVec: dimension mismatch");
    Vector out(A.rows, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) out[i] = dot(A.row(i), x);
    return out;
}

Vector matTVec(const Matrix& A, std::span<const double> x) {
    if (x.size() != A.rows)
        throw std::invalid_argument("matTVec: dimension mismatch");
    Vector out(A.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) axpy(x[i], A.row(i), out);
    return out;
}

double frobeniusNorm(const Matrix& A) { return norm2(A.data); }

bool allFinite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
}

bool allFinite(const Matrix& A) { return allFinite(std::span<const double>(A.data)); }

namespace {

// One-sided Jacobi on the columns of B (rows >= cols). Returns false if the
// off-diagonal mass has not dropped below tolerance within the sweep cap.
bool jacobiOrthogonalize(Matrix& B, Matrix& V, double* residual) {
    const std::size_t n = B.cols;
    const std::size_t m = B.rows;
    const double tol = 1e-14;
    const int maxSweeps = 64;

    *residual = 0.0;
    for (int sweep = 0; sweep < maxSweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    double bp = B(i, p), bq = B(i, q);
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                double denom = std::sqrt(app * aqq);
                if (denom == 0.0 || std::abs(apq) <= tol * denom) continue;
                worst = std::max(worst, std::abs(apq) / denom);

                double zeta = (aqq - app) / (2.0 * apq);
                double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    double bp = B(i, p), bq = B(i, q);
                    B(i, p) = c * bp - s * bq;
                    B(i, q) = s * bp + c * bq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vp = V(i, p), vq = V(i, q);
                    V(i, p) = c * vp - s * vq;
                    V(i, q) = s * vp + c * vq;
                }
            }
        }
        *residual = worst;
        if (worst == 0.0) return true;
    }
    return *residual <= 1e-12;
}

// Replace (near-)zero columns of U with unit vectors orthonormal to all
// other columns, so U keeps orthonormal columns even for rank-deficient A.
void completeOrthonormal(Matrix& U, const std::vector<std::size_t>& zeroCols) {
    const std::size_t m = U.rows;
    const std::size_t k = U.cols;
    std::size_t next = 0;
    for (std::size_t zc : zeroCols) {
        for (; next < m; ++next) {
            // Candidate basis vector e_next, orthogonalized against all columns.
            Vector cand(m, 0.0);
            cand[next] = 1.0;
            for (std::size_t c = 0; c < k; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += cand[i] * U(i, c);
                for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * U(i, c);
            }
            double nn = norm2(cand);
            if (nn > 1e-8) {
                for (std::size_t i = 0; i < m; ++i) U(i, zc) = cand[i] / nn;
                ++next;
                break;
            }
        }
    }
}

} // namespace

SvdResult svd(const Matrix& A) {
    if (A.rows == 0 || A.cols == 0)
        throw std::invalid_argument("svd: empty matrix");
    if (!allFinite(A))
        throw std::invalid_argument("svd: non-finite entries");

    const bool transposed = A.rows < A.cols;
    Matrix B = transposed ? A.transposed() : A;
    const std::size_t m = B.rows;
    const std::size_t n = B.cols;

    Matrix V(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) V(i, i) = 1.0;

    double residual = 0.0;
    if (!jacobiOrthogonalize(B, V, &residual))
        throw NumericError("svd did not converge, off-diagonal residual " +
                           std::to_string(residual));

    // Column norms are the singular values; sort descending.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Vector colNorm(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += B(i, j) * B(i, j);
        colNorm[j] = std::sqrt(s);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return colNorm[a] > colNorm[b];
    });

    Matrix U(m, n, 0.0);
    Matrix Vs(n, n, 0.0);
    Vector s(n);
    std::vector<std::size_t> zeroCols;
    const double tiny = 1e-300;
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t src = order[j];
        s[j] = colNorm[src];
        if (s[j] > tiny) {
            for (std::size_t i = 0; i < m; ++i) U(i, j) = B(i, src) / s[j];
        } else {
            s[j] = 0.0;
            zeroCols.push_back(j);
        }
        for (std::size_t i = 0; i < n; ++i) Vs(i, j) = V(i, src);
    }
    if (!zeroCols.empty()) completeOrthonormal(U, zeroCols);

    if (transposed) return {std::move(Vs), std::move(s), std::move(U)};
    return {std::move(U), std::move(s), std::move(Vs)};
}

} // namespace malt
