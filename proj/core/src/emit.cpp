#include "manifold_gauge/emit.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mgauge {

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v, 4) : "n/a"; }

// Fixed-size plot frame mapping data ranges to pixel coordinates.
struct Frame {
    double x0, x1, y0, y1;
    static constexpr double kW = 640, kH = 480, kPad = 60;

    double px(double x) const { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); }
    double py(double y) const { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); }
};

Frame fit_frame(const std::vector<double>& xs, const std::vector<double>& ys) {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool first = true;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (std::isnan(xs[k]) || std::isnan(ys[k])) continue;
        if (first) {
            x0 = x1 = xs[k];
            y0 = y1 = ys[k];
            first = false;
        }
        x0 = std::min(x0, xs[k]);
        x1 = std::max(x1, xs[k]);
        y0 = std::min(y0, ys[k]);
        y1 = std::max(y1, ys[k]);
    }
    y0 = std::min(y0, 0.0);
    y1 = std::max(y1, 0.0);
    const double mx = std::max(1e-6, 0.05 * (x1 - x0));
    const double my = std::max(1e-6, 0.05 * (y1 - y0));
    return {x0 - mx, x1 + mx, y0 - my, y1 + my};
}

std::string svg_open(const Frame& f, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel) {
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
        "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
        Frame::kW, Frame::kH, Frame::kW / 2, title);
    s += fmt::format(
        "<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{2}\" fill=\"none\" stroke=\"black\"/>\n",
        Frame::kPad, Frame::kW - 2 * Frame::kPad, Frame::kH - 2 * Frame::kPad);
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
                     "stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
                     Frame::kPad, f.py(0.0), Frame::kW - Frame::kPad, f.py(0.0));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", Frame::kW / 2,
                     Frame::kH - 20, xlabel);
    s += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" "
                     "transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                     Frame::kH / 2, ylabel);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"start\">{}</text>\n", Frame::kPad,
                     Frame::kH - Frame::kPad + 16, format_number(f.x0, 3));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
                     Frame::kW - Frame::kPad, Frame::kH - Frame::kPad + 16, format_number(f.x1, 3));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", Frame::kPad - 4,
                     Frame::kH - Frame::kPad, format_number(f.y0, 3));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", Frame::kPad - 4,
                     Frame::kPad + 10, format_number(f.y1, 3));
    return s;
}

template <class F>
void for_each_pair(const GeometryReport& rep, F&& f) {
    const std::size_t n = rep.masks.same.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rep.masks.same(i, j)) f(i, j, true);
            else if (rep.masks.cross(i, j)) f(i, j, false);
        }
    }
}

constexpr const char* kSameColor = "#1f4e9c";
constexpr const char* kCrossColor = "#c0392b";

}  // namespace

std::string format_number(double v, int precision) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    std::string s = fmt::format("{:.{}f}", v, precision);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

SummaryRow summarize(Level level, const GeometryReport& rep) {
    return {level, rep.attribute, rep.n_samples, rep.excluded, rep.u_stats, rep.c_stats};
}

std::string markdown_table(std::vector<SummaryRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        return a.level < b.level || (a.level == b.level && a.attribute < b.attribute);
    });
    std::string s =
        "| Level | Type | Pearson r Same | Pearson r Cross | Mean U_sim Same | Mean U_sim Cross "
        "| Mean C Same | Mean C Cross | Samples | Excluded |\n"
        "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
        s += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                         to_string(r.level), to_string(r.attribute), opt(r.u.same.pearson),
                         opt(r.u.cross.pearson), opt(r.u.same.mean), opt(r.u.cross.mean),
                         opt(r.c.same.mean), opt(r.c.cross.mean), r.n_samples, r.excluded);
    }
    return s;
}

std::string scatter_csv(const GeometryReport& rep) {
    std::string s = "i,j,s_base,u_sim,c_sym,group\n";
    for_each_pair(rep, [&](std::size_t i, std::size_t j, bool same) {
        s += fmt::format("{},{},{},{},{},{}\n", i, j, format_number(rep.s_base(i, j)),
                         format_number(rep.u_sim(i, j)),
                         format_number(0.5 * (rep.c_matrix(i, j) + rep.c_matrix(j, i))),
                         same ? "same" : "cross");
    });
    return s;
}

std::string trajectory_csv(const std::vector<LayerTrajectory>& trajs) {
    std::vector<const LayerTrajectory*> order;
    for (const auto& t : trajs) order.push_back(&t);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* a, const auto* b) { return a->level < b->level; });
    std::string s = "level,attribute,layer,same_u,cross_u,same_c,cross_c,excluded\n";
    for (const auto* t : order) {
        for (std::size_t i = 0; i < t->layers.size(); ++i) {
            s += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(t->level),
                             to_string(t->attribute), t->layers[i].to_string(),
                             format_number(t->same_u[i]), format_number(t->cross_u[i]),
                             format_number(t->same_c[i]), format_number(t->cross_c[i]),
                             t->excluded[i]);
        }
    }
    return s;
}

std::string portrait_csv(const std::vector<LayerTrajectory>& trajs) {
    std::vector<PortraitPoint> pts;
    for (const auto& t : trajs) {
        const auto p = phase_portrait(t);
        pts.insert(pts.end(), p.begin(), p.end());
    }
    std::stable_sort(pts.begin(), pts.end(), [](const PortraitPoint& a, const PortraitPoint& b) {
        if (a.level != b.level) return a.level < b.level;
        if (a.group != b.group) return a.group < b.group;
        return a.layer < b.layer;
    });
    std::string s = "level,group,layer,c_mean,u_mean\n";
    for (const auto& p : pts) {
        s += fmt::format("{},{},{},{},{}\n", to_string(p.level), p.group, p.layer.to_string(),
                         format_number(p.c_mean), format_number(p.u_mean));
    }
    return s;
}

std::string ablation_markdown(Level level, const AblationResult& res, double delta) {
    const auto& pre = res.pre_report.u_stats;
    const auto& post = res.post_report.u_stats;
    std::string s = fmt::format("# Ablation: {} / {} ({})\n\n", to_string(level),
                                to_string(res.pre_report.attribute), to_string(res.mode));
    s += "| Stage | Mean U_sim Same | Mean U_sim Cross | Gap | Entangled |\n";
    s += "|---|---:|---:|---:|---|\n";
    s += fmt::format("| pre | {} | {} | {} | {} |\n", opt(pre.same.mean), opt(pre.cross.mean),
                     format_number(res.pre_gap, 4), res.pre_entangled ? "yes" : "no");
    s += fmt::format("| post | {} | {} | {} | {} |\n\n", opt(post.same.mean),
                     opt(post.cross.mean), format_number(res.post_gap, 4),
                     res.post_entangled ? "yes" : "no");
    s += fmt::format("- entanglement threshold: {}\n", format_number(delta, 4));
    if (res.no_boundary_to_heal) {
        s += "- no boundary to heal: classes were already entangled before ablation\n";
    }
    s += fmt::format("- closure (0 < cross < same after ablation): {}\n",
                     res.closure ? "yes" : "no");
    s += fmt::format("- direct vs ortho patched cosine: {}\n", opt(res.healing_similarity));
    s += fmt::format("- similarity drift: {} (random edit of equal size: {})\n",
                     format_number(res.structure_drift, 4), format_number(res.random_drift, 4));
    s += fmt::format("- U_sim gap after random edit: {}, targeted: {}\n",
                     format_number(res.random_gap, 4), res.targeted ? "yes" : "no");
    return s;
}

std::string svg_scatter(const GeometryReport& rep, const std::string& title) {
    std::vector<double> xs, ys;
    std::vector<bool> same;
    for_each_pair(rep, [&](std::size_t i, std::size_t j, bool is_same) {
        xs.push_back(rep.s_base(i, j));
        ys.push_back(rep.u_sim(i, j));
        same.push_back(is_same);
    });
    const Frame f = fit_frame(xs, ys);
    std::string s = svg_open(f, title, "S_base", "U_sim");
    for (std::size_t k = 0; k < xs.size(); ++k) {
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.2\" fill=\"{}\" "
                         "fill-opacity=\"0.5\"/>\n",
                         f.px(xs[k]), f.py(ys[k]), same[k] ? kSameColor : kCrossColor);
    }
    s += "</svg>\n";
    return s;
}

std::string svg_portrait(const std::vector<LayerTrajectory>& trajs) {
    std::vector<double> xs, ys;
    for (const auto& t : trajs) {
        xs.insert(xs.end(), t.same_c.begin(), t.same_c.end());
        xs.insert(xs.end(), t.cross_c.begin(), t.cross_c.end());
        ys.insert(ys.end(), t.same_u.begin(), t.same_u.end());
        ys.insert(ys.end(), t.cross_u.begin(), t.cross_u.end());
    }
    const Frame f = fit_frame(xs, ys);
    std::string s = svg_open(f, "Phase portrait", "mean C", "mean U_sim");
    for (const auto& t : trajs) {
        for (const bool is_same : {true, false}) {
            const auto& cx = is_same ? t.same_c : t.cross_c;
            const auto& uy = is_same ? t.same_u : t.cross_u;
            std::string pts;
            for (std::size_t i = 0; i < cx.size(); ++i) {
                if (std::isnan(cx[i]) || std::isnan(uy[i])) continue;
                pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", f.px(cx[i]), f.py(uy[i]));
            }
            s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
                             "points=\"{}\"><title>{} {}</title></polyline>\n",
                             is_same ? kSameColor : kCrossColor, pts, to_string(t.level),
                             is_same ? "same" : "cross");
        }
    }
    s += "</svg>\n";
    return s;
}

}  // namespace mgauge
