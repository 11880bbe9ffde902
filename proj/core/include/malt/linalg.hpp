#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace malt {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
    Vector rowCopy(std::size_t i) const;

    Matrix transposed() const;
};

double dot(std::span<const double> u, std::span<const double> v);

/// L_p norm for p in {1, 2, inf}. Other orders are rejected.
double norm(std::span<const double> v, double p);
double norm2(std::span<const double> v);
double normInf(std::span<const double> v);

/// Cosine similarity. Both arguments must have nonzero L2 norm.
double cosine(std::span<const double> u, std::span<const double> v);

void axpy(double a, std::span<const double> x, std::span<double> y); // y += a*x
Vector scaled(std::span<const double> v, double a);
Vector added(std::span<const double> u, std::span<const double> v);
Vector subtracted(std::span<const double> u, std::span<const double> v);

Vector matVec(const Matrix& A, std::span<const double> x);  // A x
Vector matTVec(const Matrix& A, std::span<const double> x); // A^T x

double frobeniusNorm(const Matrix& A);
bool allFinite(std::span<const double> v);
bool allFinite(const Matrix& A);

struct SvdResult {
    Matrix U; // rows x k, orthonormal columns
    Vector s; // k singular values, descending
    Matrix V; // cols x k, orthonormal columns
};

/// Thin SVD (k = min(rows, cols)) via one-sided Jacobi rotations.
/// Throws NumericError if the sweep cap is reached before convergence.
SvdResult svd(const Matrix& A);

} // namespace malt
