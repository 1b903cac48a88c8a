#include "manifold_gauge/ablation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "manifold_gauge/parallel.hpp"
#include "manifold_gauge/rng.hpp"

namespace mgauge {

namespace {

constexpr std::uint64_t kStreamRandomEdit = 11;

const char* label_name(bool v) { return v ? "true" : "false"; }

double mean_u_gap(const GeometryReport& r) {
    return std::abs(r.u_stats.cross.require_mean() - r.u_stats.same.require_mean());
}

// Mean over unordered pairs of |cos(y_i, y_j) - s_ref(i, j)|.
double similarity_drift(const Matrix& y, const Matrix& s_ref, const Metric& metric) {
    const Matrix s = base_similarity(y, metric);
    const std::size_t n = s.rows();
    std::vector<double> row_sum(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) row_sum[i] += std::abs(s(i, j) - s_ref(i, j));
    });
    double total = 0.0;
    for (double v : row_sum) total += v;
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return pairs > 0 ? total / pairs : 0.0;
}

}  // namespace

ClassVectors class_vectors(const Matrix& specific, std::span<const Labels> labels,
                           Attribute attribute) {
    if (labels.size() != specific.rows()) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("class_vectors: {} labels for {} rows", labels.size(),
                                specific.rows()));
    }
    ClassVectors out;
    std::map<bool, std::size_t> counts;
    for (bool v : {false, true}) {
        out[v] = Vector(specific.cols(), 0.0);
        counts[v] = 0;
    }
    for (std::size_t i = 0; i < specific.rows(); ++i) {
        const bool v = labels[i].get(attribute);
        axpy(1.0, specific.row(i), out[v]);
        ++counts[v];
    }
    for (bool v : {false, true}) {
        if (counts[v] == 0) {
            throw Error(ErrorKind::MissingClass,
                        fmt::format("no sample has {} = {}", to_string(attribute), label_name(v)));
        }
        for (double& e : out[v]) e /= static_cast<double>(counts[v]);
    }
    return out;
}

Vector ablate_direct(std::span<const double> x, std::span<const double> v) {
    require_same_length(x, v, "ablate_direct");
    return sub(x, v);
}

Vector ablate_ortho(std::span<const double> x, std::span<const double> v, const Metric& metric) {
    require_same_length(x, v, "ablate_ortho");
    const Vector xh = unit(x, metric);
    Vector v_perp(v.begin(), v.end());
    axpy(-metric.inner(v, xh), xh, v_perp);
    return sub(x, v_perp);
}

Matrix ablate_rows(const Matrix& x, const ClassVectors& vectors, std::span<const Labels> labels,
                   Attribute attribute, PatchMode mode, const Metric& metric) {
    if (labels.size() != x.rows()) {
        throw Error(ErrorKind::InvalidArgument, "ablate_rows: label count does not match rows");
    }
    for (const auto& [label, v] : vectors) {
        if (v.size() != x.cols()) {
            throw Error(ErrorKind::InvalidArgument,
                        fmt::format("ablate_rows: vector for {} has {} dims, rows have {}",
                                    label_name(label), v.size(), x.cols()));
        }
    }
    Matrix out(x.rows(), x.cols());
    parallel_for(x.rows(), [&](std::size_t i) {
        const bool label = labels[i].get(attribute);
        const auto it = vectors.find(label);
        if (it == vectors.end()) {
            throw Error(ErrorKind::MissingClass,
                        fmt::format("no patch vector for {} = {}", to_string(attribute),
                                    label_name(label)));
        }
        const Vector r = mode == PatchMode::Direct ? ablate_direct(x.row(i), it->second)
                                                   : ablate_ortho(x.row(i), it->second, metric);
        std::copy(r.begin(), r.end(), out.row(i).begin());
    });
    return out;
}

double mean_row_cosine(const Matrix& a, const Matrix& b, const Metric& metric) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() == 0) {
        throw Error(ErrorKind::InvalidArgument, "mean_row_cosine: shape mismatch or empty input");
    }
    std::vector<double> c(a.rows());
    parallel_for(a.rows(), [&](std::size_t i) {
        c[i] = metric.inner(unit(a.row(i), metric), unit(b.row(i), metric));
    });
    double s = 0.0;
    for (double v : c) s += v;
    return s / static_cast<double>(c.size());
}

AblationResult healing_report(const Matrix& x_pre, const Matrix& x_post, const Matrix& x_base,
                              std::span<const Labels> labels, Attribute attribute, PatchMode mode,
                              const AblationOptions& opts, const Matrix* x_other) {
    if (x_pre.rows() != x_post.rows() || x_pre.cols() != x_post.cols()) {
        throw Error(ErrorKind::InvalidArgument, "healing_report: patched shape differs from input");
    }
    AblationResult res;
    res.mode = mode;
    res.patched = x_post;
    res.pre_report = analyze_geometry(x_base, x_pre, labels, attribute, opts.metric);
    res.post_report = analyze_geometry(x_base, x_post, labels, attribute, opts.metric);
    res.pre_gap = mean_u_gap(res.pre_report);
    res.post_gap = mean_u_gap(res.post_report);
    res.pre_entangled = res.pre_gap < opts.delta;
    res.post_entangled = res.post_gap < opts.delta;
    res.no_boundary_to_heal = res.pre_entangled;
    const double same = res.post_report.u_stats.same.require_mean();
    const double cross = res.post_report.u_stats.cross.require_mean();
    res.closure = cross > 0.0 && cross < same;

    if (x_other != nullptr) {
        const Matrix& direct = mode == PatchMode::Direct ? x_post : *x_other;
        const Matrix& ortho = mode == PatchMode::Direct ? *x_other : x_post;
        res.healing_similarity = mean_row_cosine(direct, ortho, opts.metric);
    }

    // Control: move every row by the same distance in a random direction.
    Matrix random_edit(x_pre.rows(), x_pre.cols());
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(x_pre.cols()));
    parallel_for(x_pre.rows(), [&](std::size_t i) {
        const CounterRng rng(opts.seed, stream_id(kStreamRandomEdit, i));
        Vector dir(x_pre.cols());
        for (std::size_t k = 0; k < dir.size(); ++k) dir[k] = rng.normal(k) * inv_sqrt_d;
        const double step = opts.metric.norm(sub(x_post.row(i), x_pre.row(i)));
        const double dn = opts.metric.norm(dir);
        auto out = random_edit.row(i);
        for (std::size_t k = 0; k < dir.size(); ++k) out[k] = x_pre(i, k) + step * dir[k] / dn;
    });
    res.structure_drift = similarity_drift(x_post, res.pre_report.s_base, opts.metric);
    res.random_drift = similarity_drift(random_edit, res.pre_report.s_base, opts.metric);
    res.random_gap =
        mean_u_gap(analyze_geometry(x_base, random_edit, labels, attribute, opts.metric));
    res.targeted = res.structure_drift < opts.drift_bound && res.post_gap < res.random_gap;
    return res;
}

Ablation run_ablation(const Matrix& x_base, const Matrix& x_task, std::span<const Labels> labels,
                      Attribute attribute, PatchMode mode, const AblationOptions& opts) {
    Ablation out;
    out.vectors = class_vectors(center(interference(x_task, x_base)).specific, labels, attribute);
    const Matrix direct = ablate_rows(x_task, out.vectors, labels, attribute, PatchMode::Direct,
                                      opts.metric);
    const Matrix ortho =
        ablate_rows(x_task, out.vectors, labels, attribute, PatchMode::Ortho, opts.metric);
    const bool is_direct = mode == PatchMode::Direct;
    out.result = healing_report(x_task, is_direct ? direct : ortho, x_base, labels, attribute, mode,
                                opts, is_direct ? &ortho : &direct);
    return out;
}

PatchFile export_patch(const ClassVectors& vectors, Level level, Layer layer, PatchMode mode,
                       Attribute attribute, const std::filesystem::path& dir) {
    PatchFile patch;
    patch.level = level;
    patch.layer = layer;
    patch.mode = mode;
    patch.attribute = attribute;
    for (const auto& [label, v] : vectors) {
        patch.d_model = v.size();
        std::vector<float> f(v.size());
        std::transform(v.begin(), v.end(), f.begin(), [](double e) { return static_cast<float>(e); });
        patch.entries.emplace(label_name(label), std::move(f));
    }
    write_patch(patch, dir);
    return patch;
}

}  // namespace mgauge
