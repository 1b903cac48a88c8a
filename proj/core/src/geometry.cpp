#include "manifold_gauge/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "manifold_gauge/parallel.hpp"

namespace mgauge {

Matrix base_similarity(const Matrix& x, const Metric& metric) {
    const Matrix xh = unit_rows(x, metric);
    const std::size_t n = xh.rows();
    Matrix s(n, n);
    parallel_for(n, [&](std::size_t i) {
        s(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::clamp(metric.inner(xh.row(i), xh.row(j)), -1.0, 1.0);
            s(i, j) = v;
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
    }
    return s;
}

Matrix interference(const Matrix& x_task, const Matrix& x_base) {
    if (x_task.rows() != x_base.rows() || x_task.cols() != x_base.cols()) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("interference: shape mismatch {}x{} vs {}x{}", x_task.rows(),
                                x_task.cols(), x_base.rows(), x_base.cols()));
    }
    Matrix d(x_task.rows(), x_task.cols());
    auto a = x_task.data();
    auto b = x_base.data();
    auto out = d.data();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] - b[k];
    return d;
}

Centered center(const Matrix& delta) {
    if (delta.rows() == 0) {
        throw Error(ErrorKind::InvalidArgument, "center: empty interference matrix");
    }
    const std::size_t n = delta.rows();
    const std::size_t d = delta.cols();
    Centered c{Vector(d, 0.0), delta};
    for (std::size_t i = 0; i < n; ++i) {
        auto r = delta.row(i);
        for (std::size_t k = 0; k < d; ++k) c.v_task[k] += r[k];
    }
    for (double& v : c.v_task) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = c.specific.row(i);
        for (std::size_t k = 0; k < d; ++k) r[k] -= c.v_task[k];
    }
    return c;
}

Decomposition gram_schmidt(std::span<const double> x, std::span<const double> v,
                           const Metric& metric) {
    require_same_length(x, v, "gram_schmidt");
    Decomposition dec;
    dec.x_hat = unit(x, metric);
    const double v_norm = metric.norm(v);

    // Two projection passes keep <x_hat, u_hat> at rounding level even when
    // v is nearly collinear with x.
    Vector r(v.begin(), v.end());
    double p = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        const double c = metric.inner(r, dec.x_hat);
        axpy(-c, dec.x_hat, r);
        p += c;
    }
    const double q = metric.norm(r);
    if (!(v_norm > kEpsNorm) || !(q > kEpsCollinear * v_norm)) {
        throw Error(ErrorKind::Collinear,
                    fmt::format("interference is collinear with the concept direction "
                                "(q = {:.3e}, |v| = {:.3e})",
                                q, v_norm));
    }
    for (double& e : r) e /= q;
    dec.p = p;
    dec.q = q;
    dec.u_hat = std::move(r);
    return dec;
}

Decomposition rotation_params(std::span<const double> x, std::span<const double> delta,
                              const Metric& metric) {
    Decomposition dec = gram_schmidt(x, delta, metric);
    const double x_norm = metric.norm(x);
    const double d_norm = metric.norm(delta);
    Rotation rot;
    rot.omega = d_norm / x_norm;
    const double cos_phi = dec.p / d_norm;
    const double sin_phi = dec.q / d_norm;
    rot.phi = std::atan2(dec.q, dec.p);
    rot.n_coef = std::sqrt(1.0 + 2.0 * rot.omega * cos_phi + rot.omega * rot.omega);
    rot.cos_alpha = (1.0 + rot.omega * cos_phi) / rot.n_coef;
    rot.sin_alpha = rot.omega * sin_phi / rot.n_coef;
    dec.rotation = rot;
    return dec;
}

double s_new_expanded(const Decomposition& dec_i, const Decomposition& dec_j,
                      std::span<const double> x_hat_i, std::span<const double> x_hat_j,
                      const Metric& metric) {
    if (!dec_i.rotation || !dec_j.rotation) {
        throw Error(ErrorKind::InvalidArgument, "s_new_expanded: decomposition lacks rotation");
    }
    const Rotation& ri = *dec_i.rotation;
    const Rotation& rj = *dec_j.rotation;
    const double s_base = metric.inner(x_hat_i, x_hat_j);
    const double c_ij = metric.inner(x_hat_i, dec_j.u_hat);
    const double c_ji = metric.inner(dec_i.u_hat, x_hat_j);
    const double u_sim = metric.inner(dec_i.u_hat, dec_j.u_hat);
    return ri.cos_alpha * rj.cos_alpha * s_base + ri.cos_alpha * rj.sin_alpha * c_ij +
           ri.sin_alpha * rj.cos_alpha * c_ji + ri.sin_alpha * rj.sin_alpha * u_sim;
}

PairTrend pair_trend(const Decomposition& dec_i, const Decomposition& dec_j,
                     std::span<const double> v_i, std::span<const double> v_j,
                     std::span<const double> x_hat_i, std::span<const double> x_hat_j,
                     const Metric& metric) {
    if (!(dec_i.q > 0.0) || !(dec_j.q > 0.0)) {
        throw Error(ErrorKind::Collinear, "pair_trend: vanishing orthogonal component");
    }
    const double qq = dec_i.q * dec_j.q;
    const double vv = metric.inner(v_i, v_j);
    const double v_i_xj = metric.inner(v_i, x_hat_j);
    const double xi_v_j = metric.inner(x_hat_i, v_j);
    return {.lambda = dec_i.p * dec_j.p / qq,
            .k = (vv - dec_j.p * v_i_xj - dec_i.p * xi_v_j) / qq};
}

MetricMatrices metric_matrices(const Matrix& x_hat, const Matrix& u_hat, const Metric& metric) {
    if (x_hat.rows() != u_hat.rows() || x_hat.cols() != u_hat.cols()) {
        throw Error(ErrorKind::InvalidArgument, "metric_matrices: shape mismatch");
    }
    const std::size_t n = x_hat.rows();
    MetricMatrices m{Matrix(n, n), Matrix(n, n)};
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) m.u_sim(i, j) = metric.inner(u_hat.row(i), u_hat.row(j));
        for (std::size_t j = 0; j < n; ++j) m.c_matrix(i, j) = metric.inner(x_hat.row(i), u_hat.row(j));
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) m.u_sim(i, j) = m.u_sim(j, i);
    }
    return m;
}

std::size_t PairMask::count_pairs() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) c += (*this)(i, j) ? 1 : 0;
    }
    return c;
}

MaskPair MaskPair::restricted_to(const std::vector<bool>& valid) const {
    MaskPair out = *this;
    const std::size_t n = same.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!valid[i] || !valid[j]) {
                out.same.set(i, j, false);
                out.cross.set(i, j, false);
            }
        }
    }
    return out;
}

MaskPair class_masks(std::span<const Labels> labels, Attribute attribute) {
    const std::size_t n = labels.size();
    MaskPair m{PairMask(n), PairMask(n), attribute};
    for (std::size_t i = 0; i < n; ++i) {
        const bool li = labels[i].get(attribute);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool same = li == labels[j].get(attribute);
            m.same.set(i, j, same);
            m.cross.set(i, j, !same);
        }
    }
    return m;
}

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Centered second moments; a spread below 1e-12 of scale counts as zero.
bool has_spread(double sxx, double mean, std::size_t n) {
    const double scale = std::max(1.0, mean * mean);
    return sxx > static_cast<double>(n) * 1e-24 * scale;
}

}  // namespace

std::optional<LinearFit> trend_fit(std::span<const double> xs, std::span<const double> ys) {
    require_same_length(xs, ys, "trend_fit");
    if (xs.size() < 2) return std::nullopt;
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (!has_spread(sxx, mx, xs.size())) return std::nullopt;
    const double slope = sxy / sxx;
    return LinearFit{slope, my - slope * mx};
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    require_same_length(xs, ys, "pearson");
    if (xs.size() < 2) return std::nullopt;
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        syy += (ys[k] - my) * (ys[k] - my);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (!has_spread(sxx, mx, xs.size()) || !has_spread(syy, my, ys.size())) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double MaskStats::require_mean() const {
    if (!mean) throw Error(ErrorKind::UndefinedStatistic, "mean undefined: " + undefined);
    return *mean;
}

double MaskStats::require_pearson() const {
    if (!pearson) throw Error(ErrorKind::UndefinedStatistic, "pearson undefined: " + undefined);
    return *pearson;
}

LinearFit MaskStats::require_fit() const {
    if (!fit) throw Error(ErrorKind::UndefinedStatistic, "linear fit undefined: " + undefined);
    return *fit;
}

namespace {

MaskStats stats_for(const Matrix& values, const PairMask& mask, const Matrix& s_base) {
    std::vector<double> xs, ys;
    const std::size_t n = mask.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!mask(i, j)) continue;
            xs.push_back(s_base(i, j));
            ys.push_back(0.5 * (values(i, j) + values(j, i)));
        }
    }
    MaskStats st;
    st.n_pairs = xs.size();
    if (xs.empty()) {
        st.undefined = "empty mask";
        return st;
    }
    st.mean = mean_of(ys);
    st.pearson = pearson(xs, ys);
    st.fit = trend_fit(xs, ys);
    if (!st.pearson || !st.fit) {
        st.undefined = xs.size() < 2 ? "fewer than two pairs" : "zero variance";
    }
    return st;
}

}  // namespace

GroupStats group_stats(const Matrix& values, const MaskPair& masks, const Matrix& s_base) {
    const std::size_t n = masks.same.size();
    if (values.rows() != n || values.cols() != n || s_base.rows() != n || s_base.cols() != n) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("group_stats: mask is {}x{}, matrices {}x{} and {}x{}", n, n,
                                values.rows(), values.cols(), s_base.rows(), s_base.cols()));
    }
    return {stats_for(values, masks.same, s_base), stats_for(values, masks.cross, s_base)};
}

GeometryReport analyze_geometry(const Matrix& x_base, const Matrix& x_task,
                                std::span<const Labels> labels, Attribute attribute,
                                const Metric& metric) {
    const std::size_t n = x_base.rows();
    if (labels.size() != n) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("analyze_geometry: {} labels for {} samples", labels.size(), n));
    }
    GeometryReport rep;
    rep.attribute = attribute;
    rep.n_samples = n;

    const Centered centered = center(interference(x_task, x_base));
    rep.v_task = centered.v_task;
    rep.s_base = base_similarity(x_base, metric);
    const Matrix x_hat = unit_rows(x_base, metric);

    std::vector<Decomposition> decs(n);
    rep.valid.assign(n, true);
    Matrix u_hat(n, x_base.cols());
    std::vector<char> ok(n, 1);
    parallel_for(n, [&](std::size_t i) {
        try {
            decs[i] = gram_schmidt(x_base.row(i), centered.specific.row(i), metric);
            std::copy(decs[i].u_hat.begin(), decs[i].u_hat.end(), u_hat.row(i).begin());
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Collinear) throw;
            ok[i] = 0;
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        rep.valid[i] = ok[i] != 0;
        if (!rep.valid[i]) {
            ++rep.excluded;
        } else {
            rep.max_orthogonality_residual = std::max(
                rep.max_orthogonality_residual, std::abs(metric.inner(x_hat.row(i), u_hat.row(i))));
        }
    }

    auto mats = metric_matrices(x_hat, u_hat, metric);
    rep.u_sim = std::move(mats.u_sim);
    rep.c_matrix = std::move(mats.c_matrix);

    rep.masks = class_masks(labels, attribute).restricted_to(rep.valid);
    const MaskPair& masks = rep.masks;
    rep.s_stats = group_stats(rep.s_base, masks, rep.s_base);
    rep.u_stats = group_stats(rep.u_sim, masks, rep.s_base);
    rep.c_stats = group_stats(rep.c_matrix, masks, rep.s_base);

    // Per-pair algebraic trend, reduced row by row then merged in index order.
    struct RowTrend {
        double same_lambda = 0, same_k = 0, cross_lambda = 0, cross_k = 0;
        std::size_t same_n = 0, cross_n = 0;
        double residual = 0, asym = 0;
    };
    std::vector<RowTrend> rows(n);
    parallel_for(n, [&](std::size_t i) {
        if (!rep.valid[i]) return;
        RowTrend& rt = rows[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!rep.valid[j]) continue;
            const PairTrend t = pair_trend(decs[i], decs[j], centered.specific.row(i),
                                           centered.specific.row(j), x_hat.row(i), x_hat.row(j),
                                           metric);
            rt.residual = std::max(
                rt.residual, std::abs(t.lambda * rep.s_base(i, j) + t.k - rep.u_sim(i, j)));
            rt.asym = std::max(rt.asym, std::abs(rep.c_matrix(i, j) - rep.c_matrix(j, i)));
            if (masks.same(i, j)) {
                rt.same_lambda += t.lambda;
                rt.same_k += t.k;
                ++rt.same_n;
            } else if (masks.cross(i, j)) {
                rt.cross_lambda += t.lambda;
                rt.cross_k += t.k;
                ++rt.cross_n;
            }
        }
    });
    RowTrend total;
    for (const auto& rt : rows) {
        total.same_lambda += rt.same_lambda;
        total.same_k += rt.same_k;
        total.same_n += rt.same_n;
        total.cross_lambda += rt.cross_lambda;
        total.cross_k += rt.cross_k;
        total.cross_n += rt.cross_n;
        total.residual = std::max(total.residual, rt.residual);
        total.asym = std::max(total.asym, rt.asym);
    }
    const auto summary = [](double l, double k, std::size_t c) {
        return c == 0 ? PairTrendSummary{}
                      : PairTrendSummary{c, l / static_cast<double>(c), k / static_cast<double>(c)};
    };
    rep.same_trend = summary(total.same_lambda, total.same_k, total.same_n);
    rep.cross_trend = summary(total.cross_lambda, total.cross_k, total.cross_n);
    rep.max_trend_residual = total.residual;
    rep.max_c_asymmetry = total.asym;
    return rep;
}

}  // namespace mgauge
