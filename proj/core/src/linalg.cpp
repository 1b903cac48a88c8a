#include "manifold_gauge/linalg.hpp"

#include <cmath>

#include <fmt/format.h>

namespace mgauge {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::Config: return "config";
        case ErrorKind::Format: return "format";
        case ErrorKind::Io: return "io";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::DataIntegrity: return "data-integrity";
        case ErrorKind::Version: return "version";
        case ErrorKind::DegenerateVector: return "degenerate-vector";
        case ErrorKind::Collinear: return "collinear";
        case ErrorKind::UndefinedStatistic: return "undefined-statistic";
        case ErrorKind::MissingClass: return "missing-class";
    }
    return "unknown";
}

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* what) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("{}: length mismatch ({} vs {})", what, a.size(), b.size()));
    }
}

Metric Metric::weighted(Vector g) {
    Metric m;
    m.weights_sq_.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) m.weights_sq_[k] = g[k] * g[k];
    m.gain_ = std::move(g);
    return m;
}

double Metric::inner(std::span<const double> a, std::span<const double> b) const {
    if (!is_weighted()) return dot(a, b);
    require_same_length(a, b, "inner");
    if (a.size() != weights_sq_.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("G-metric has {} weights, vectors have {}", weights_sq_.size(),
                                a.size()));
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += weights_sq_[k] * a[k] * b[k];
    return s;
}

double Metric::norm(std::span<const double> a) const { return std::sqrt(inner(a, a)); }

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "dot");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double weighted_inner(std::span<const double> a, std::span<const double> b,
                      std::span<const double> g) {
    require_same_length(a, b, "weighted_inner");
    require_same_length(a, g, "weighted_inner (weights)");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += g[k] * g[k] * a[k] * b[k];
    return s;
}

Vector unit(std::span<const double> v, const Metric& metric) {
    const double n = metric.norm(v);
    if (!(n > kEpsNorm)) {
        throw Error(ErrorKind::DegenerateVector,
                    fmt::format("cannot normalize vector with norm {:.3e}", n));
    }
    Vector out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "add");
    Vector out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
    return out;
}

Vector sub(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "sub");
    Vector out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
    return out;
}

Vector scaled(std::span<const double> a, double s) {
    Vector out(a.begin(), a.end());
    for (double& x : out) x *= s;
    return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::InvalidArgument, "axpy: length mismatch");
    }
    for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

Matrix unit_rows(const Matrix& m, const Metric& metric) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double n = metric.norm(m.row(i));
        if (!(n > kEpsNorm)) {
            throw Error(ErrorKind::DegenerateVector,
                        fmt::format("row {} has near-zero norm {:.3e}", i, n));
        }
        auto src = m.row(i);
        auto dst = out.row(i);
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] / n;
    }
    return out;
}

Matrix rows_subset(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= m.rows()) {
            throw Error(ErrorKind::InvalidArgument,
                        fmt::format("row index {} out of range ({} rows)", rows[r], m.rows()));
        }
        auto src = m.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace mgauge
