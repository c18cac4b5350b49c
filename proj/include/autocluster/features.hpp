#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autocluster/trajectory.hpp"

namespace autocluster {

struct IndicatorConfig {
    double ttc_t1 = 2.0;   // seconds, t1 < t2 < t3
    double ttc_t2 = 3.0;
    double ttc_t3 = 4.0;
    double tick = 0.1;     // seconds per frame
    double window_s = 60.0;
    double min_partial_window_s = 10.0;  // shorter remainders merge into the previous window
    double psd_decel = 3.35;   // m/s^2, acceptable maximum deceleration
    double madr_m1 = 8.45;     // m/s^2, fixed MADR
    double madr_m2_mean = 8.45;
    double madr_m2_std = 1.40;
    double drac_cap = 9.8;     // m/s^2
    double ttc_cap = 7.95;     // seconds
    double psd_cap = 2.0;
    double lambda_rect = 0.0;  // [0,1); 0 = hard clamp at the caps

    void validate() const;  // throws std::invalid_argument on bad settings
};

enum class MatrixState { raw, rectified, standardized };

// Vehicles x named risk features. Values are row-major.
struct FeatureMatrix {
    std::vector<int> vehicle_ids;
    std::vector<std::string> feature_names;
    std::vector<double> values;
    MatrixState state = MatrixState::raw;
    // Filled by standardize() for inverse mapping in reports.
    std::vector<double> column_means;
    std::vector<double> column_stds;
    std::vector<std::string> warnings;

    std::size_t rows() const { return vehicle_ids.size(); }
    std::size_t cols() const { return feature_names.size(); }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * cols(), cols()};
    }
    std::span<double> row(std::size_t i) {
        return {values.data() + i * cols(), cols()};
    }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
    std::size_t column_index(const std::string& name) const;  // throws if unknown

    static FeatureMatrix from_values(std::vector<int> ids, std::vector<std::string> names,
                                     std::vector<double> values, MatrixState state);
    // Copy without the given column; used by feature elimination.
    FeatureMatrix without_column(std::size_t col) const;
};

// Canonical order of the 12 risk features.
const std::vector<std::string>& risk_feature_names();

// Per-frame time to collision; defined only while closing (relative_speed > 0).
std::vector<std::optional<double>> ttc_series(const ConflictSeries& cs);

// Per-frame deceleration rate to avoid crash, capped at cfg.drac_cap.
std::vector<std::optional<double>> drac_series(const ConflictSeries& cs, const IndicatorConfig& cfg);

// Per-frame proportion of stopping distance; defined where follower speed > 0.
std::vector<std::optional<double>> psd_series(const ConflictSeries& cs, double decel);

// Tumbling-window frame ranges [begin, end) over a vehicle's presence.
// A final partial window of at least min_partial frames is kept; shorter
// remainders merge into the previous window (or stand alone if none exists).
std::vector<std::pair<std::size_t, std::size_t>> segment_windows(std::size_t n_frames,
                                                                 std::size_t window_frames,
                                                                 std::size_t min_partial_frames);

struct TetTit {
    double tet = 0.0;  // fraction of window duration spent under the threshold
    double tit = 0.0;  // time-averaged accumulated TTC shortfall, [0, ttc_star]
};

// Per-window TET/TIT maxima for a TTC series aligned with the frame grid.
TetTit tet_tit(const std::vector<std::optional<double>>& ttc, double ttc_star,
               const std::vector<std::pair<std::size_t, std::size_t>>& windows, double tick);

enum class CpiMode { m1, m2 };

// Crash potential index: time fraction weighted by P(DRAC > MADR), max over windows.
double cpi(const std::vector<std::optional<double>>& drac, CpiMode mode, const IndicatorConfig& cfg,
           const std::vector<std::pair<std::size_t, std::size_t>>& windows);

// One row per vehicle with the 12 features of risk_feature_names().
// Vehicles with no defined conflict frames get safe-limit values.
FeatureMatrix extract_features(const std::vector<VehicleTrack>& tracks,
                               const std::vector<ConflictSeries>& conflicts,
                               const IndicatorConfig& cfg);

// Clamps safety-direction features at their caps (scaled beyond the cap when
// lambda_rect > 0). raw -> rectified.
FeatureMatrix rectify(const FeatureMatrix& m, const IndicatorConfig& cfg);

// Per-column z-score; constant columns become zeros with a warning.
// rectified -> standardized.
FeatureMatrix standardize(const FeatureMatrix& m);

}  // namespace autocluster
