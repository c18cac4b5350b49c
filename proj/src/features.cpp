#include "autocluster/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "autocluster/util.hpp"

namespace autocluster {

void IndicatorConfig::validate() const {
    if (!(ttc_t1 > 0.0 && ttc_t1 < ttc_t2 && ttc_t2 < ttc_t3))
        throw std::invalid_argument("indicator config: need 0 < t1 < t2 < t3");
    if (tick <= 0.0) throw std::invalid_argument("indicator config: tick must be > 0");
    if (window_s <= 0.0) throw std::invalid_argument("indicator config: window must be > 0");
    const double frames = window_s / tick;
    if (std::abs(frames - std::round(frames)) > 1e-9)
        throw std::invalid_argument("indicator config: window must be a multiple of tick");
    if (min_partial_window_s < 0.0 || min_partial_window_s > window_s)
        throw std::invalid_argument("indicator config: bad min_partial_window");
    if (drac_cap <= 0.0 || ttc_cap <= 0.0 || psd_cap <= 0.0)
        throw std::invalid_argument("indicator config: caps must be > 0");
    if (psd_decel <= 0.0) throw std::invalid_argument("indicator config: psd_decel must be > 0");
    if (madr_m2_std <= 0.0) throw std::invalid_argument("indicator config: madr_m2_std must be > 0");
    if (lambda_rect < 0.0 || lambda_rect >= 1.0)
        throw std::invalid_argument("indicator config: lambda_rect must be in [0,1)");
}

const std::vector<std::string>& risk_feature_names() {
    static const std::vector<std::string> names = {
        "TTC.min",     "TET.t1.max", "TET.t2.max", "TET.t3.max", "TIT.t1.max", "TIT.t2.max",
        "TIT.t3.max",  "DRAC.max",   "CPI.m1.max", "CPI.m2.max", "PSD.min",    "PSD.mean",
    };
    return names;
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j)
        if (feature_names[j] == name) return j;
    throw std::out_of_range("unknown feature column: " + name);
}

FeatureMatrix FeatureMatrix::from_values(std::vector<int> ids, std::vector<std::string> names,
                                         std::vector<double> values, MatrixState state) {
    if (values.size() != ids.size() * names.size())
        throw std::invalid_argument("feature matrix size mismatch");
    FeatureMatrix m;
    m.vehicle_ids = std::move(ids);
    m.feature_names = std::move(names);
    m.values = std::move(values);
    m.state = state;
    return m;
}

FeatureMatrix FeatureMatrix::without_column(std::size_t col) const {
    if (col >= cols()) throw std::out_of_range("without_column: bad index");
    FeatureMatrix out;
    out.vehicle_ids = vehicle_ids;
    out.state = state;
    out.feature_names.reserve(cols() - 1);
    for (std::size_t j = 0; j < cols(); ++j)
        if (j != col) out.feature_names.push_back(feature_names[j]);
    out.values.reserve(rows() * (cols() - 1));
    for (std::size_t i = 0; i < rows(); ++i)
        for (std::size_t j = 0; j < cols(); ++j)
            if (j != col) out.values.push_back(at(i, j));
    return out;
}

std::vector<std::optional<double>> ttc_series(const ConflictSeries& cs) {
    std::vector<std::optional<double>> out(cs.records.size());
    for (std::size_t i = 0; i < cs.records.size(); ++i) {
        const auto& r = cs.records[i];
        if (r.relative_speed > 0.0) out[i] = r.gap / r.relative_speed;
    }
    return out;
}

std::vector<std::optional<double>> drac_series(const ConflictSeries& cs,
                                               const IndicatorConfig& cfg) {
    std::vector<std::optional<double>> out(cs.records.size());
    for (std::size_t i = 0; i < cs.records.size(); ++i) {
        const auto& r = cs.records[i];
        if (r.relative_speed > 0.0)
            out[i] = std::min(r.relative_speed * r.relative_speed / r.gap, cfg.drac_cap);
    }
    return out;
}

std::vector<std::optional<double>> psd_series(const ConflictSeries& cs, double decel) {
    if (decel <= 0.0) throw std::invalid_argument("psd_series: decel must be > 0");
    std::vector<std::optional<double>> out(cs.records.size());
    for (std::size_t i = 0; i < cs.records.size(); ++i) {
        const auto& r = cs.records[i];
        if (r.follower_speed > 0.0)
            out[i] = r.gap / (r.follower_speed * r.follower_speed / (2.0 * decel));
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> segment_windows(std::size_t n_frames,
                                                                 std::size_t window_frames,
                                                                 std::size_t min_partial_frames) {
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    if (n_frames == 0 || window_frames == 0) return windows;
    std::size_t begin = 0;
    while (begin + window_frames <= n_frames) {
        windows.emplace_back(begin, begin + window_frames);
        begin += window_frames;
    }
    const std::size_t rem = n_frames - begin;
    if (rem > 0) {
        if (rem >= min_partial_frames || windows.empty())
            windows.emplace_back(begin, n_frames);
        else
            windows.back().second = n_frames;  // merge short remainder into the last window
    }
    return windows;
}

TetTit tet_tit(const std::vector<std::optional<double>>& ttc, double ttc_star,
               const std::vector<std::pair<std::size_t, std::size_t>>& windows, double tick) {
    if (ttc_star <= 0.0) throw std::invalid_argument("tet_tit: ttc_star must be > 0");
    TetTit best;
    for (const auto& [begin, end] : windows) {
        long exposed = 0;
        double shortfall = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            if (!ttc[i]) continue;
            const double v = *ttc[i];
            if (v > 0.0 && v < ttc_star) {
                ++exposed;
                shortfall += ttc_star - v;
            }
        }
        const double duration = static_cast<double>(end - begin) * tick;
        best.tet = std::max(best.tet, static_cast<double>(exposed) * tick / duration);
        best.tit = std::max(best.tit, shortfall * tick / duration);
    }
    return best;
}

double cpi(const std::vector<std::optional<double>>& drac, CpiMode mode, const IndicatorConfig& cfg,
           const std::vector<std::pair<std::size_t, std::size_t>>& windows) {
    if (mode == CpiMode::m2 && cfg.madr_m2_std <= 0.0)
        throw std::invalid_argument("cpi: m2 requires a positive MADR std");
    double best = 0.0;
    for (const auto& [begin, end] : windows) {
        double prob_time = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            if (!drac[i]) continue;
            const double d = *drac[i];
            double p;
            if (mode == CpiMode::m1) {
                p = d > cfg.madr_m1 ? 1.0 : 0.0;
            } else {
                p = std::clamp(normal_cdf((d - cfg.madr_m2_mean) / cfg.madr_m2_std), 0.0, 1.0);
            }
            prob_time += p;
        }
        const double duration = static_cast<double>(end - begin) * cfg.tick;
        best = std::max(best, prob_time * cfg.tick / duration);
    }
    return best;
}

namespace {

struct GridSeries {
    std::vector<std::optional<double>> ttc;
    std::vector<std::optional<double>> drac;
};

// Aligns the sparse conflict records with the track's sample sequence.
GridSeries to_grid(const VehicleTrack& track, const ConflictSeries& cs,
                   const IndicatorConfig& cfg) {
    GridSeries g;
    g.ttc.resize(track.samples.size());
    g.drac.resize(track.samples.size());
    const auto ttc_r = ttc_series(cs);
    const auto drac_r = drac_series(cs, cfg);
    std::size_t ri = 0;
    for (std::size_t si = 0; si < track.samples.size() && ri < cs.records.size(); ++si) {
        if (cs.records[ri].frame_index == track.samples[si].frame_index) {
            g.ttc[si] = ttc_r[ri];
            g.drac[si] = drac_r[ri];
            ++ri;
        }
    }
    return g;
}

}  // namespace

FeatureMatrix extract_features(const std::vector<VehicleTrack>& tracks,
                               const std::vector<ConflictSeries>& conflicts,
                               const IndicatorConfig& cfg) {
    cfg.validate();
    if (tracks.empty()) throw std::runtime_error("extract_features: no tracks");

    std::unordered_map<int, const ConflictSeries*> series_by_id;
    for (const auto& cs : conflicts) series_by_id[cs.follower_id] = &cs;
    static const ConflictSeries empty_series;

    const auto window_frames = static_cast<std::size_t>(std::llround(cfg.window_s / cfg.tick));
    const auto min_partial =
        static_cast<std::size_t>(std::llround(cfg.min_partial_window_s / cfg.tick));
    const std::vector<double> thresholds = {cfg.ttc_t1, cfg.ttc_t2, cfg.ttc_t3};

    FeatureMatrix m;
    m.feature_names = risk_feature_names();
    m.vehicle_ids.resize(tracks.size());
    m.values.assign(tracks.size() * m.feature_names.size(), 0.0);
    m.state = MatrixState::raw;

    parallel_for(tracks.size(), [&](std::size_t vi) {
        const VehicleTrack& track = tracks[vi];
        const auto it = series_by_id.find(track.vehicle_id);
        const ConflictSeries& cs = it == series_by_id.end() ? empty_series : *it->second;
        m.vehicle_ids[vi] = track.vehicle_id;
        auto row = m.row(vi);

        const auto windows = segment_windows(track.samples.size(), window_frames, min_partial);
        const GridSeries grid = to_grid(track, cs, cfg);

        // TTC.min: minimum over windows of the within-window mean TTC.
        double ttc_min = cfg.ttc_cap;
        bool any_ttc = false;
        for (const auto& [begin, end] : windows) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t i = begin; i < end; ++i) {
                if (grid.ttc[i]) {
                    sum += *grid.ttc[i];
                    ++count;
                }
            }
            if (count > 0) {
                const double mean = sum / static_cast<double>(count);
                ttc_min = any_ttc ? std::min(ttc_min, mean) : mean;
                any_ttc = true;
            }
        }
        row[0] = ttc_min;

        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            const TetTit tt = tet_tit(grid.ttc, thresholds[t], windows, cfg.tick);
            row[1 + t] = tt.tet;
            row[4 + t] = tt.tit;
        }

        double drac_max = 0.0;
        for (const auto& d : grid.drac)
            if (d) drac_max = std::max(drac_max, *d);
        row[7] = drac_max;

        row[8] = cpi(grid.drac, CpiMode::m1, cfg, windows);
        row[9] = cpi(grid.drac, CpiMode::m2, cfg, windows);

        const auto psd = psd_series(cs, cfg.psd_decel);
        double psd_min = cfg.psd_cap, psd_sum = 0.0;
        std::size_t psd_count = 0;
        for (const auto& p : psd) {
            if (!p) continue;
            psd_min = psd_count == 0 ? *p : std::min(psd_min, *p);
            psd_sum += *p;
            ++psd_count;
        }
        row[10] = psd_min;
        row[11] = psd_count > 0 ? psd_sum / static_cast<double>(psd_count) : cfg.psd_cap;
    });
    return m;
}

namespace {

double apply_cap(double value, double cap, double lambda) {
    if (value <= cap) return value;
    return cap + lambda * (value - cap);
}

}  // namespace

FeatureMatrix rectify(const FeatureMatrix& m, const IndicatorConfig& cfg) {
    if (m.state != MatrixState::raw)
        throw std::invalid_argument("rectify: expected a raw feature matrix");
    FeatureMatrix out = m;
    struct CapRule {
        const char* name;
        double cap;
    };
    const CapRule rules[] = {
        {"TTC.min", cfg.ttc_cap},  {"DRAC.max", cfg.drac_cap},
        {"PSD.min", cfg.psd_cap},  {"PSD.mean", cfg.psd_cap},
    };
    for (const auto& rule : rules) {
        const std::size_t j = out.column_index(rule.name);
        for (std::size_t i = 0; i < out.rows(); ++i)
            out.at(i, j) = apply_cap(out.at(i, j), rule.cap, cfg.lambda_rect);
    }
    out.state = MatrixState::rectified;
    return out;
}

FeatureMatrix standardize(const FeatureMatrix& m) {
    if (m.state == MatrixState::raw)
        throw std::invalid_argument("standardize: rectify the matrix first");
    FeatureMatrix out = m;
    const std::size_t n = m.rows(), d = m.cols();
    if (n == 0) throw std::invalid_argument("standardize: empty matrix");
    out.column_means.assign(d, 0.0);
    out.column_stds.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += m.at(i, j);
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = m.at(i, j) - mean;
            sq += dev * dev;
        }
        const double stdev = std::sqrt(sq / static_cast<double>(n));
        out.column_means[j] = mean;
        out.column_stds[j] = stdev;
        if (stdev == 0.0) {
            out.warnings.push_back("constant column passed through as zeros: " + m.feature_names[j]);
            for (std::size_t i = 0; i < n; ++i) out.at(i, j) = 0.0;
        } else {
            for (std::size_t i = 0; i < n; ++i) out.at(i, j) = (m.at(i, j) - mean) / stdev;
        }
    }
    out.state = MatrixState::standardized;
    return out;
}

}  // namespace autocluster
