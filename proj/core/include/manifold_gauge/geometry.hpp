#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manifold_gauge/dataset.hpp"
#include "manifold_gauge/linalg.hpp"

namespace mgauge {

/// Equivalent rotation produced by normalizing x + delta.
///
/// With omega = |delta| / |x| and phi the angle between delta and x, the
/// normalized update equals cos(alpha) x_hat + sin(alpha) u_hat where
///   N         = sqrt(1 + 2 omega cos(phi) + omega^2)
///   cos(alpha) = (1 + omega cos(phi)) / N
///   sin(alpha) = omega sin(phi) / N
struct Rotation {
    double omega = 0.0;
    double phi = 0.0;
    double n_coef = 1.0;
    double cos_alpha = 1.0;
    double sin_alpha = 0.0;
};

/// Gram-Schmidt split of v against the direction of x:
/// v = p * x_hat + q * u_hat with <x_hat, u_hat> = 0 and |u_hat| = 1.
struct Decomposition {
    double p = 0.0;  // signed projection length <v, x_hat>
    double q = 0.0;  // orthogonal length |v - p x_hat|
    Vector x_hat;
    Vector u_hat;
    std::optional<Rotation> rotation;  // set by rotation_params
};

Matrix base_similarity(const Matrix& x, const Metric& metric = Metric::standard());

Matrix interference(const Matrix& x_task, const Matrix& x_base);

struct Centered {
    Vector v_task;
    Matrix specific;
};

// Subtracts the column mean (the global task vector) from every row.
Centered center(const Matrix& delta);

// Throws Collinear when q <= kEpsCollinear * |v| (or v vanishes).
Decomposition gram_schmidt(std::span<const double> x, std::span<const double> v,
                           const Metric& metric = Metric::standard());

Decomposition rotation_params(std::span<const double> x, std::span<const double> delta,
                              const Metric& metric = Metric::standard());

// Four-term expansion of <x_hat_i', x_hat_j'> in terms of base similarity,
// cross terms and innovation similarity. Both decompositions need rotation.
double s_new_expanded(const Decomposition& dec_i, const Decomposition& dec_j,
                      std::span<const double> x_hat_i, std::span<const double> x_hat_j,
                      const Metric& metric = Metric::standard());

struct PairTrend {
    double lambda = 0.0;
    double k = 0.0;
};

// Per-pair slope/intercept such that lambda * S_base + k = <u_hat_i, u_hat_j>.
PairTrend pair_trend(const Decomposition& dec_i, const Decomposition& dec_j,
                     std::span<const double> v_i, std::span<const double> v_j,
                     std::span<const double> x_hat_i, std::span<const double> x_hat_j,
                     const Metric& metric = Metric::standard());

struct MetricMatrices {
    Matrix u_sim;     // <u_hat_i, u_hat_j>, symmetric
    Matrix c_matrix;  // <x_hat_i, u_hat_j>, generally asymmetric
};

MetricMatrices metric_matrices(const Matrix& x_hat, const Matrix& u_hat,
                               const Metric& metric = Metric::standard());

// Square boolean matrix stored densely.
class PairMask {
public:
    PairMask() = default;
    explicit PairMask(std::size_t n) : n_(n), bits_(n * n, 0) {}

    std::size_t size() const noexcept { return n_; }
    bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { bits_[i * n_ + j] = v ? 1 : 0; }

    // Unordered off-diagonal pairs that are set.
    std::size_t count_pairs() const;

private:
    std::size_t n_ = 0;
    std::vector<unsigned char> bits_;
};

struct MaskPair {
    PairMask same;
    PairMask cross;
    Attribute attribute = Attribute::IsEven;

    // Drops every pair touching a row with valid[i] == false.
    MaskPair restricted_to(const std::vector<bool>& valid) const;
};

MaskPair class_masks(std::span<const Labels> labels, Attribute attribute);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares line y = slope * x + intercept; nullopt when var(x) vanishes.
std::optional<LinearFit> trend_fit(std::span<const double> xs, std::span<const double> ys);

// Pearson correlation; nullopt when either side has zero variance or n < 2.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

struct MaskStats {
    std::size_t n_pairs = 0;
    std::optional<double> mean;
    std::optional<double> pearson;  // against S_base over the same pairs
    std::optional<LinearFit> fit;   // value ~ slope * S_base + intercept
    std::string undefined;          // why a statistic is missing, empty if none

    double require_mean() const;
    double require_pearson() const;
    LinearFit require_fit() const;
};

struct GroupStats {
    MaskStats same;
    MaskStats cross;
};

// Statistics over unordered off-diagonal pairs. Asymmetric inputs are
// symmetrized as (m_ij + m_ji) / 2.
GroupStats group_stats(const Matrix& values, const MaskPair& masks, const Matrix& s_base);

struct PairTrendSummary {
    std::size_t n_pairs = 0;
    double mean_lambda = 0.0;
    double mean_k = 0.0;
};

struct GeometryReport {
    Attribute attribute = Attribute::IsEven;
    std::size_t n_samples = 0;
    std::size_t excluded = 0;  // collinear rows left out of U/C statistics
    std::vector<bool> valid;
    Vector v_task;
    Matrix s_base;
    Matrix u_sim;
    Matrix c_matrix;
    MaskPair masks;  // restricted to valid rows
    GroupStats s_stats;
    GroupStats u_stats;
    GroupStats c_stats;
    PairTrendSummary same_trend;
    PairTrendSummary cross_trend;
    double max_trend_residual = 0.0;  // max |lambda S_base + k - U_sim| over valid pairs
    double max_c_asymmetry = 0.0;
    double max_orthogonality_residual = 0.0;  // max |<x_hat_i, u_hat_i>|
};

// Full pipeline: interference -> center -> gram_schmidt -> metric matrices
// -> masked group statistics.
GeometryReport analyze_geometry(const Matrix& x_base, const Matrix& x_task,
                                std::span<const Labels> labels, Attribute attribute,
                                const Metric& metric = Metric::standard());

}  // namespace mgauge
