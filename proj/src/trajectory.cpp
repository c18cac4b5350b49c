#include "autocluster/trajectory.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace autocluster {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim whitespace and stray CR
        auto b = field.find_first_not_of(" \t\r\n");
        auto e = field.find_last_not_of(" \t\r\n");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_long(const std::string& s, std::int64_t& out) {
    double d;
    if (!parse_double(s, d)) return false;
    out = static_cast<std::int64_t>(d);
    return static_cast<double>(out) == d;
}

}  // namespace

ColumnMap default_ngsim_columns() {
    return {
        {"vehicle_id", "Vehicle_ID"}, {"frame_id", "Frame_ID"}, {"local_y", "Local_Y"},
        {"v_vel", "v_Vel"},           {"v_length", "v_Length"}, {"lane_id", "Lane_ID"},
        {"preceding", "Preceding"},
    };
}

std::vector<VehicleTrack> parse_ngsim(const std::string& path, LengthUnit unit,
                                      IngestStats* stats, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line) || header_line.find_first_not_of(" \t\r\n") == std::string::npos)
        throw std::runtime_error("empty trajectory file: " + path);

    const auto header = split_csv_line(header_line);
    std::unordered_map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) col_index[header[i]] = i;

    auto require = [&](const std::string& logical) -> std::size_t {
        const auto it = columns.find(logical);
        const std::string name = it == columns.end() ? logical : it->second;
        const auto found = col_index.find(name);
        if (found == col_index.end())
            throw std::runtime_error("missing mandatory column: " + name);
        return found->second;
    };

    const std::size_t c_vid = require("vehicle_id");
    const std::size_t c_frame = require("frame_id");
    const std::size_t c_y = require("local_y");
    const std::size_t c_vel = require("v_vel");
    const std::size_t c_len = require("v_length");
    const std::size_t c_lane = require("lane_id");
    const std::size_t c_prec = require("preceding");

    const double scale = unit == LengthUnit::feet ? kFeetToMetres : 1.0;

    struct Row {
        std::int64_t frame;
        TrajectorySample sample;
        double length;
    };
    std::unordered_map<int, std::vector<Row>> per_vehicle;
    std::vector<int> vehicle_order;

    IngestStats local{};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        ++local.rows_total;
        const auto fields = split_csv_line(line);
        const std::size_t needed =
            std::max({c_vid, c_frame, c_y, c_vel, c_len, c_lane, c_prec}) + 1;
        std::int64_t vid, frame, lane, prec;
        double y, vel, len;
        if (fields.size() < needed || !parse_long(fields[c_vid], vid) ||
            !parse_long(fields[c_frame], frame) || !parse_double(fields[c_y], y) ||
            !parse_double(fields[c_vel], vel) || !parse_double(fields[c_len], len) ||
            !parse_long(fields[c_lane], lane) || !parse_long(fields[c_prec], prec) ||
            len * scale <= 0.0) {
            ++local.rows_dropped;
            continue;
        }
        Row row;
        row.frame = frame;
        row.sample.frame_index = frame;
        row.sample.position = y * scale;
        row.sample.velocity = vel * scale;
        row.sample.lane_id = static_cast<int>(lane);
        if (prec > 0) row.sample.preceding_vehicle_id = static_cast<int>(prec);
        row.length = len * scale;
        auto [it, inserted] = per_vehicle.try_emplace(static_cast<int>(vid));
        if (inserted) vehicle_order.push_back(static_cast<int>(vid));
        it->second.push_back(row);
    }
    if (local.rows_total == 0) throw std::runtime_error("empty trajectory file: " + path);

    std::sort(vehicle_order.begin(), vehicle_order.end());
    std::vector<VehicleTrack> tracks;
    tracks.reserve(vehicle_order.size());
    for (int vid : vehicle_order) {
        auto& rows = per_vehicle[vid];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.frame < b.frame; });
        VehicleTrack track;
        track.vehicle_id = vid;
        track.length = rows.front().length;
        track.samples.reserve(rows.size());
        std::int64_t last_frame = std::numeric_limits<std::int64_t>::min();
        for (const auto& row : rows) {
            if (row.frame == last_frame) {
                ++local.duplicates_dropped;
                continue;
            }
            last_frame = row.frame;
            track.samples.push_back(row.sample);
        }
        if (!track.samples.empty()) tracks.push_back(std::move(track));
    }
    if (stats) *stats = local;
    return tracks;
}

namespace {

// Solves the (order+1)x(order+1) normal equations for a polynomial fit of y on
// offsets; returns fitted values at the requested evaluation offsets.
std::vector<double> polyfit_eval(const std::vector<double>& offsets, const std::vector<double>& y,
                                 int order, const std::vector<double>& eval_at) {
    const int terms = order + 1;
    // Normalize offsets to keep the Vandermonde system well conditioned.
    double scale = 1.0;
    for (double t : offsets) scale = std::max(scale, std::abs(t));
    std::vector<double> A(static_cast<std::size_t>(terms) * terms, 0.0);
    std::vector<double> rhs(terms, 0.0);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        double powj = 1.0;
        std::vector<double> p(terms);
        const double t = offsets[i] / scale;
        for (int j = 0; j < terms; ++j) {
            p[j] = powj;
            powj *= t;
        }
        for (int r = 0; r < terms; ++r) {
            rhs[r] += p[r] * y[i];
            for (int c = 0; c < terms; ++c) A[static_cast<std::size_t>(r) * terms + c] += p[r] * p[c];
        }
    }
    // Gaussian elimination with partial pivoting.
    std::vector<double> coef = rhs;
    for (int col = 0; col < terms; ++col) {
        int pivot = col;
        for (int r = col + 1; r < terms; ++r)
            if (std::abs(A[static_cast<std::size_t>(r) * terms + col]) >
                std::abs(A[static_cast<std::size_t>(pivot) * terms + col]))
                pivot = r;
        for (int c = 0; c < terms; ++c)
            std::swap(A[static_cast<std::size_t>(col) * terms + c],
                      A[static_cast<std::size_t>(pivot) * terms + c]);
        std::swap(coef[col], coef[pivot]);
        const double diag = A[static_cast<std::size_t>(col) * terms + col];
        for (int r = col + 1; r < terms; ++r) {
            const double f = A[static_cast<std::size_t>(r) * terms + col] / diag;
            for (int c = col; c < terms; ++c)
                A[static_cast<std::size_t>(r) * terms + c] -=
                    f * A[static_cast<std::size_t>(col) * terms + c];
            coef[r] -= f * coef[col];
        }
    }
    for (int r = terms - 1; r >= 0; --r) {
        for (int c = r + 1; c < terms; ++c)
            coef[r] -= A[static_cast<std::size_t>(r) * terms + c] * coef[c];
        coef[r] /= A[static_cast<std::size_t>(r) * terms + r];
    }
    std::vector<double> out;
    out.reserve(eval_at.size());
    for (double t : eval_at) {
        double v = 0.0, powj = 1.0;
        const double ts = t / scale;
        for (int j = 0; j < terms; ++j) {
            v += coef[j] * powj;
            powj *= ts;
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::vector<double> savitzky_golay(const std::vector<double>& series, int window, int poly_order) {
    if (window % 2 == 0 || window <= poly_order)
        throw std::invalid_argument("savitzky_golay: window must be odd and > poly_order");
    const auto n = series.size();
    if (n < static_cast<std::size_t>(window)) return series;

    const int half = window / 2;
    std::vector<double> offsets(window);
    for (int i = 0; i < window; ++i) offsets[i] = static_cast<double>(i - half);

    std::vector<double> out(n);
    // Interior points: centered window.
    std::vector<double> buf(window);
    for (std::size_t i = half; i + half < n; ++i) {
        for (int j = 0; j < window; ++j) buf[j] = series[i - half + static_cast<std::size_t>(j)];
        out[i] = polyfit_eval(offsets, buf, poly_order, {0.0})[0];
    }
    // Edges: fit the first/last full window and evaluate off-center.
    std::vector<double> head_eval, tail_eval;
    for (int i = 0; i < half; ++i) head_eval.push_back(static_cast<double>(i - half));
    for (int i = 0; i < half; ++i) tail_eval.push_back(static_cast<double>(i + 1));
    for (int j = 0; j < window; ++j) buf[j] = series[static_cast<std::size_t>(j)];
    auto head = polyfit_eval(offsets, buf, poly_order, head_eval);
    for (int i = 0; i < half; ++i) out[static_cast<std::size_t>(i)] = head[static_cast<std::size_t>(i)];
    for (int j = 0; j < window; ++j) buf[j] = series[n - static_cast<std::size_t>(window) + j];
    auto tail = polyfit_eval(offsets, buf, poly_order, tail_eval);
    for (int i = 0; i < half; ++i) out[n - static_cast<std::size_t>(half) + i] = tail[static_cast<std::size_t>(i)];
    return out;
}

SmoothResult smooth_track(const VehicleTrack& track, int window, int poly_order) {
    if (window % 2 == 0 || window <= poly_order)
        throw std::invalid_argument("smooth_track: window must be odd and > poly_order");
    SmoothResult result{track, false};
    if (track.samples.size() < static_cast<std::size_t>(window)) {
        result.skipped = true;
        return result;
    }
    std::vector<double> pos, vel;
    pos.reserve(track.samples.size());
    vel.reserve(track.samples.size());
    for (const auto& s : track.samples) {
        pos.push_back(s.position);
        vel.push_back(s.velocity);
    }
    pos = savitzky_golay(pos, window, poly_order);
    vel = savitzky_golay(vel, window, poly_order);
    for (std::size_t i = 0; i < track.samples.size(); ++i) {
        result.track.samples[i].position = pos[i];
        result.track.samples[i].velocity = std::max(0.0, vel[i]);
    }
    return result;
}

std::vector<ConflictSeries> build_conflict_series(const std::vector<VehicleTrack>& tracks,
                                                  const PairingConfig& cfg) {
    std::unordered_map<int, const VehicleTrack*> by_id;
    by_id.reserve(tracks.size());
    for (const auto& t : tracks) by_id[t.vehicle_id] = &t;

    std::vector<ConflictSeries> out;
    out.reserve(tracks.size());
    for (const auto& follower : tracks) {
        ConflictSeries series;
        series.follower_id = follower.vehicle_id;
        for (const auto& s : follower.samples) {
            if (!s.preceding_vehicle_id) continue;
            const auto lead_it = by_id.find(*s.preceding_vehicle_id);
            if (lead_it == by_id.end()) {
                ++series.unknown_leader_skipped;
                continue;
            }
            const VehicleTrack& leader = *lead_it->second;
            const auto cmp = [](const TrajectorySample& a, std::int64_t f) { return a.frame_index < f; };
            const auto ls = std::lower_bound(leader.samples.begin(), leader.samples.end(),
                                             s.frame_index, cmp);
            if (ls == leader.samples.end() || ls->frame_index != s.frame_index) continue;
            if (ls->lane_id != s.lane_id) continue;
            double gap = ls->position - s.position - leader.length;
            if (gap < cfg.min_gap_m) {
                if (gap < 0.0) ++series.negative_gap_clamped;
                gap = cfg.min_gap_m;
            }
            series.records.push_back({s.frame_index, gap, s.velocity - ls->velocity, s.velocity});
        }
        out.push_back(std::move(series));
    }
    return out;
}

}  // namespace autocluster
