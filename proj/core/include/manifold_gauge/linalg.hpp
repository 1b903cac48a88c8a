#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "manifold_gauge/error.hpp"

namespace mgauge {

using Vector = std::vector<double>;

// Dense row-major matrix. Rows are samples, columns are model dimensions.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Inner-product geometry used by every decomposition.
///
/// The standard metric is the Euclidean dot product. The G-metric carries the
/// affine weights g of a normalization layer and evaluates
/// <a, b>_G = sum_k g_k^2 a_k b_k, under which the ellipsoid produced by
/// RMSNorm is a sphere.
class Metric {
public:
    static Metric standard() { return Metric{}; }
    static Metric weighted(Vector g);

    bool is_weighted() const noexcept { return !weights_sq_.empty(); }
    std::span<const double> gain() const noexcept { return gain_; }

    double inner(std::span<const double> a, std::span<const double> b) const;
    double norm(std::span<const double> a) const;

private:
    Vector gain_;
    Vector weights_sq_;
};

inline constexpr double kEpsNorm = 1e-12;
inline constexpr double kEpsCollinear = 1e-10;

double dot(std::span<const double> a, std::span<const double> b);
double weighted_inner(std::span<const double> a, std::span<const double> b,
                      std::span<const double> g);

Vector unit(std::span<const double> v, const Metric& metric = Metric::standard());

Vector add(std::span<const double> a, std::span<const double> b);
Vector sub(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Row-normalize; throws DegenerateVector naming the first offending row.
Matrix unit_rows(const Matrix& m, const Metric& metric = Metric::standard());

Matrix rows_subset(const Matrix& m, std::span<const std::size_t> rows);

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* what);

}  // namespace mgauge
