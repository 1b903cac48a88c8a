#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "manifold_gauge/emit.hpp"
#include "manifold_gauge/synthetic.hpp"

using namespace mgauge;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

GeometryReport small_report(std::size_t n = 12) {
    SynthConfig cfg;
    cfg.n_samples = n;
    cfg.d_model = 16;
    const BaseDraw base = gen_base(cfg);
    const Injection inj = inject(cfg, base.x, base.labels);
    return analyze_geometry(base.x, inj.x_task, base.labels, cfg.attribute);
}

LayerTrajectory tiny_trajectory(Level level) {
    LayerTrajectory t;
    t.level = level;
    t.attribute = Attribute::IsEven;
    for (int l = 0; l < 3; ++l) {
        t.layers.emplace_back(l);
        t.same_u.push_back(0.5);
        t.cross_u.push_back(-0.1 * l);
        t.same_c.push_back(0.25);
        t.cross_c.push_back(l == 1 ? std::numeric_limits<double>::quiet_NaN() : 0.125);
        t.excluded.push_back(0);
    }
    return t;
}

}  // namespace

TEST_CASE("number formatting") {
    CHECK(format_number(0.5) == "0.500000");
    CHECK(format_number(-0.0) == "0.000000");
    CHECK(format_number(-1e-9, 4) == "0.0000");
    CHECK(format_number(-0.25, 2) == "-0.25");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("summary table") {
    const auto rep = small_report();
    SummaryRow undefined{Level::L2, Attribute::IsLarge, 5, 5, {}, {}};
    const std::string md = markdown_table({summarize(Level::L3, rep), undefined});
    const auto lines = lines_of(md);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] ==
          "| Level | Type | Pearson r Same | Pearson r Cross | Mean U_sim Same | Mean U_sim Cross "
          "| Mean C Same | Mean C Cross | Samples | Excluded |");
    // Rows are sorted by level.
    CHECK(lines[2].rfind("| L2 | is_large | n/a | n/a |", 0) == 0);
    CHECK(lines[3].rfind("| L3 | is_even | ", 0) == 0);
    CHECK(lines[3].find(format_number(*rep.u_stats.cross.mean, 4)) != std::string::npos);
    CHECK(lines[3].find("| 12 | 0 |") != std::string::npos);
}

TEST_CASE("scatter csv lists each valid pair once") {
    const auto rep = small_report();
    const auto lines = lines_of(scatter_csv(rep));
    CHECK(lines[0] == "i,j,s_base,u_sim,c_sym,group");
    CHECK(lines.size() == 1 + 12 * 11 / 2);
    CHECK(lines[1].rfind("0,1,", 0) == 0);
    CHECK(lines[1].find(",cross") != std::string::npos);
    CHECK(lines[2].rfind("0,2,", 0) == 0);
    CHECK(lines[2].find(",same") != std::string::npos);
}

TEST_CASE("trajectory and portrait csv") {
    const std::vector<LayerTrajectory> trajs{tiny_trajectory(Level::L4), tiny_trajectory(Level::L2)};
    const auto traj = lines_of(trajectory_csv(trajs));
    CHECK(traj[0] == "level,attribute,layer,same_u,cross_u,same_c,cross_c,excluded");
    CHECK(traj.size() == 7);
    CHECK(traj[1] == "L2,is_even,0,0.500000,0.000000,0.250000,0.125000,0");
    CHECK(traj[2] == "L2,is_even,1,0.500000,-0.100000,0.250000,nan,0");

    const auto por = lines_of(portrait_csv(trajs));
    CHECK(por[0] == "level,group,layer,c_mean,u_mean");
    CHECK(por.size() == 13);
    CHECK(por[1] == "L2,cross,0,0.125000,0.000000");
    CHECK(por[4] == "L2,same,0,0.250000,0.500000");
    CHECK(por[7].rfind("L4,cross,0,", 0) == 0);
}

TEST_CASE("ablation markdown") {
    SynthConfig cfg;
    cfg.n_samples = 40;
    cfg.d_model = 16;
    const BaseDraw base = gen_base(cfg);
    const Injection inj = inject(cfg, base.x, base.labels);
    const auto ab = run_ablation(base.x, inj.x_task, base.labels, cfg.attribute, PatchMode::Direct);
    const std::string md = ablation_markdown(Level::L3, ab.result, 0.1);
    CHECK(md.rfind("# Ablation: L3 / is_even (direct)", 0) == 0);
    CHECK(md.find("| pre |") != std::string::npos);
    CHECK(md.find("| post |") != std::string::npos);
    CHECK(md.find("entanglement threshold: 0.1000") != std::string::npos);
    CHECK(md.find("no boundary to heal") == std::string::npos);
}

TEST_CASE("svg output is well formed and deterministic") {
    const auto rep = small_report();
    const std::string a = svg_scatter(rep, "L3");
    CHECK(a.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\"", 0) == 0);
    CHECK(a.substr(a.size() - 7) == "</svg>\n");
    CHECK(a == svg_scatter(rep, "L3"));
    std::size_t circles = 0;
    for (std::size_t p = a.find("<circle"); p != std::string::npos; p = a.find("<circle", p + 1)) ++circles;
    CHECK(circles == 66);

    const std::string portrait = svg_portrait({tiny_trajectory(Level::L3)});
    CHECK(portrait.find("<title>L3 same</title>") != std::string::npos);
    CHECK(portrait.find("<title>L3 cross</title>") != std::string::npos);
    CHECK(portrait.find("nan") == std::string::npos);
}
