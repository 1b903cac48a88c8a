#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>

#include "manifold_gauge/geometry.hpp"
#include "manifold_gauge/store.hpp"

namespace mgauge {

// Label value -> mean specific interference of the samples carrying it.
using ClassVectors = std::map<bool, Vector>;

// Throws MissingClass when a label value has no rows.
ClassVectors class_vectors(const Matrix& specific, std::span<const Labels> labels,
                           Attribute attribute);

// x - v.
Vector ablate_direct(std::span<const double> x, std::span<const double> v);

// x - (v - <v, x_hat> x_hat): removes only the part of v orthogonal to x,
// so <x - result, x_hat> = 0. Throws DegenerateVector for vanishing x.
Vector ablate_ortho(std::span<const double> x, std::span<const double> v,
                    const Metric& metric = Metric::standard());

// Applies the label-matched vector to every row.
Matrix ablate_rows(const Matrix& x, const ClassVectors& vectors, std::span<const Labels> labels,
                   Attribute attribute, PatchMode mode, const Metric& metric = Metric::standard());

// Mean row-wise cosine between two equally shaped matrices.
double mean_row_cosine(const Matrix& a, const Matrix& b, const Metric& metric = Metric::standard());

struct AblationOptions {
    double delta = 0.1;         // entanglement threshold on |cross - same| of mean U_sim
    double drift_bound = 0.15;  // max mean |S_post - S_base| for a targeted edit
    std::uint64_t seed = 0;     // random-perturbation control
    Metric metric = Metric::standard();
};

struct AblationResult {
    PatchMode mode = PatchMode::Direct;
    Matrix patched;
    GeometryReport pre_report;
    GeometryReport post_report;
    std::optional<double> healing_similarity;  // direct vs ortho patched states
    double pre_gap = 0.0;   // |cross - same| mean U_sim before
    double post_gap = 0.0;  // and after
    bool pre_entangled = false;
    bool post_entangled = false;
    bool no_boundary_to_heal = false;  // already entangled before the edit
    bool closure = false;              // 0 < cross < same after the edit
    double structure_drift = 0.0;      // mean |cos(post_i, post_j) - S_base(i, j)|
    double random_drift = 0.0;         // same, for a random edit of equal row norms
    double random_gap = 0.0;           // U_sim gap after that random edit
    bool targeted = false;             // drift within bound and gap below random_gap
};

// Compares (X_pre vs X_base) with (X_post vs X_base). `x_other` is the
// patched set of the other mode, used for healing_similarity.
AblationResult healing_report(const Matrix& x_pre, const Matrix& x_post, const Matrix& x_base,
                              std::span<const Labels> labels, Attribute attribute, PatchMode mode,
                              const AblationOptions& opts = {},
                              const Matrix* x_other = nullptr);

// Class vectors from (x_task - x_base), patch in `mode`, then healing_report.
struct Ablation {
    ClassVectors vectors;
    AblationResult result;
};

Ablation run_ablation(const Matrix& x_base, const Matrix& x_task, std::span<const Labels> labels,
                      Attribute attribute, PatchMode mode, const AblationOptions& opts = {});

PatchFile export_patch(const ClassVectors& vectors, Level level, Layer layer, PatchMode mode,
                       Attribute attribute, const std::filesystem::path& dir);

}  // namespace mgauge
