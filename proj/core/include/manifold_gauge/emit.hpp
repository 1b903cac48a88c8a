#pragma once

#include <string>
#include <vector>

#include "manifold_gauge/ablation.hpp"
#include "manifold_gauge/geometry.hpp"
#include "manifold_gauge/layers.hpp"

namespace mgauge {

// Text emitters. Output depends only on the inputs: rows are sorted, numbers
// use fixed precision, nothing carries a timestamp.

struct SummaryRow {
    Level level = Level::L3;
    Attribute attribute = Attribute::IsEven;
    std::size_t n_samples = 0;
    std::size_t excluded = 0;
    GroupStats u;
    GroupStats c;
};

SummaryRow summarize(Level level, const GeometryReport& rep);

// Level | Type | Pearson r (same, cross) | mean U_sim (same, cross) | mean C (same, cross).
std::string markdown_table(std::vector<SummaryRow> rows);

// One line per valid unordered pair: i,j,s_base,u_sim,c_sym,group.
std::string scatter_csv(const GeometryReport& rep);

std::string trajectory_csv(const std::vector<LayerTrajectory>& trajs);

// Columns: level,group,layer,c_mean,u_mean.
std::string portrait_csv(const std::vector<LayerTrajectory>& trajs);

std::string ablation_markdown(Level level, const AblationResult& res, double delta);

std::string svg_scatter(const GeometryReport& rep, const std::string& title);
std::string svg_portrait(const std::vector<LayerTrajectory>& trajs);

std::string format_number(double v, int precision = 6);

}  // namespace mgauge
