#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autocluster {

// One row of a vehicle track at 0.1 s resolution. Positions are longitudinal
// metres along the roadway, velocities m/s.
struct TrajectorySample {
    std::int64_t frame_index = 0;
    double position = 0.0;
    double velocity = 0.0;
    int lane_id = 0;
    std::optional<int> preceding_vehicle_id;  // absent or 0 in the raw data means no leader
};

struct VehicleTrack {
    int vehicle_id = 0;
    double length = 0.0;  // metres, > 0
    std::vector<TrajectorySample> samples;  // sorted by frame_index, no duplicates
};

// Follower/leader geometry for the frames where both vehicles share a lane.
struct ConflictRecord {
    std::int64_t frame_index = 0;
    double gap = 0.0;             // x_lead - x_follow - L_lead, metres
    double relative_speed = 0.0;  // v_follow - v_lead, m/s (positive = closing)
    double follower_speed = 0.0;  // m/s
};

struct ConflictSeries {
    int follower_id = 0;
    std::vector<ConflictRecord> records;  // sorted by frame, sparse
    int negative_gap_clamped = 0;         // overlap artifacts clamped to min_gap
    int unknown_leader_skipped = 0;
};

struct IngestStats {
    std::size_t rows_total = 0;
    std::size_t rows_dropped = 0;       // missing or unparsable mandatory fields
    std::size_t duplicates_dropped = 0; // repeated (vehicle, frame) pairs
};

// Column remapping for non-standard CSV schemas; keys are the logical names
// vehicle_id, frame_id, local_y, v_vel, v_length, lane_id, preceding.
using ColumnMap = std::map<std::string, std::string>;

ColumnMap default_ngsim_columns();

enum class LengthUnit { feet, metres };

constexpr double kFeetToMetres = 0.3048;

// Parses an NGSIM-format trajectory CSV into per-vehicle tracks sorted by
// vehicle id. Rows with missing mandatory fields are dropped and counted;
// duplicate (vehicle, frame) rows keep the first occurrence.
// Throws std::runtime_error naming the column if a mandatory column is absent,
// or on an empty file.
std::vector<VehicleTrack> parse_ngsim(const std::string& path, LengthUnit unit,
                                      IngestStats* stats = nullptr,
                                      const ColumnMap& columns = default_ngsim_columns());

struct SmoothResult {
    VehicleTrack track;
    bool skipped = false;  // track shorter than the window; returned unchanged
};

// Savitzky-Golay smoothing of position and velocity. Window must be odd and
// greater than poly_order. Velocity is clamped at 0 from below; frame indices
// are untouched. Tracks shorter than the window pass through with skipped=true.
SmoothResult smooth_track(const VehicleTrack& track, int window, int poly_order);

// Least-squares polynomial smoother over a single series; edge points are
// fitted on the first/last full window. Exposed for direct testing.
std::vector<double> savitzky_golay(const std::vector<double>& series, int window, int poly_order);

struct PairingConfig {
    double min_gap_m = 0.1;  // clamp for overlap artifacts
};

// Emits one ConflictSeries per track. A record exists only for frames where
// the follower's preceding vehicle is present at the same frame and lane.
std::vector<ConflictSeries> build_conflict_series(const std::vector<VehicleTrack>& tracks,
                                                  const PairingConfig& cfg = {});

}  // namespace autocluster
