#pragma once

#include <optional>
#include <string>
#include <vector>

#include "autocluster/clustering.hpp"
#include "autocluster/features.hpp"

namespace autocluster {

// Elimination-based model reliance importance across a set of models.
struct ImportanceTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> model_names;
    // difference_ratio[f][m] = r_i^m = bSI(without feature f) / bSI(baseline) - 1
    std::vector<std::vector<std::optional<double>>> difference_ratio;
    // centered[f][m] = R_i^m = r_i^m - mean_f r_f^m
    std::vector<std::vector<std::optional<double>>> centered;
    std::vector<double> model_mean_ratio;  // E_m, the model-related change
    std::vector<double> aggregate;         // R_i, mean of R_i^m over models
    std::vector<double> aggregate_min;     // range of R_i^m across models
    std::vector<double> aggregate_max;
    std::vector<double> baseline_bsi;      // bSI_0^m per model
    std::vector<std::string> warnings;
};

// Fits each model on the full standardized matrix, then once per eliminated
// feature on the re-standardized remainder, and reports centered difference
// ratios of bSI. Cells where a reduced fit fails are recorded as missing.
ImportanceTable elimination_importance(const std::vector<ModelSpec>& models,
                                       const FeatureMatrix& m);

struct FeatureSelection {
    std::vector<std::string> kept;     // most important (most negative R_i) first
    std::vector<std::string> dropped;  // R_i > 0
};

// Keeps features whose aggregate R_i <= 0. Throws if nothing qualifies.
FeatureSelection select_features(const ImportanceTable& table);

}  // namespace autocluster
