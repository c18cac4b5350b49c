#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"
#include "internal.hpp"

namespace autocluster {

namespace {

// Pairwise-distance quantile on a subsample above this size; the subsample is
// drawn with a fixed internal seed so the algorithm stays a deterministic
// function of the data alone.
constexpr std::size_t kQuantileSampleCap = 2000;
constexpr std::uint64_t kSubsampleSeed = 0x6d73686266ULL;

double bandwidth_from_quantile(const FeatureMatrix& m, double q) {
    const std::size_t n = m.rows();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (n > kQuantileSampleCap) {
        std::mt19937_64 rng(kSubsampleSeed);
        for (std::size_t i = 0; i < kQuantileSampleCap; ++i) {
            const std::size_t j = i + rng() % (n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(kQuantileSampleCap);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<double> dists;
    dists.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b)
            dists.push_back(euclidean_distance(m.row(idx[a]), m.row(idx[b])));
    std::sort(dists.begin(), dists.end());
    return dists.empty() ? 0.0 : quantile_sorted(dists, q);
}

}  // namespace

ClusteringResult mean_shift(const FeatureMatrix& m, const MeanShiftOptions& opt) {
    const std::size_t n = m.rows(), d = m.cols();
    if (n == 0) throw std::invalid_argument("mean_shift: empty matrix");
    if (!(opt.bandwidth_quantile > 0.0 && opt.bandwidth_quantile <= 1.0))
        throw std::invalid_argument("mean_shift: quantile must be in (0, 1]");

    ClusteringResult result;
    const double bandwidth = n > 1 ? bandwidth_from_quantile(m, opt.bandwidth_quantile) : 0.0;
    if (bandwidth <= 0.0) {
        result.labels.assign(n, 0);
        result.k_found = 1;
        return result;
    }

    // Seed one walker per occupied grid cell of size bandwidth, started at the
    // cell mean.
    std::map<std::vector<std::int64_t>, std::pair<std::vector<double>, std::size_t>> bins;
    std::vector<std::int64_t> key(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = m.row(i);
        for (std::size_t j = 0; j < d; ++j)
            key[j] = static_cast<std::int64_t>(std::floor(row[j] / bandwidth));
        auto [it, inserted] = bins.try_emplace(key, std::vector<double>(d, 0.0), std::size_t{0});
        for (std::size_t j = 0; j < d; ++j) it->second.first[j] += row[j];
        ++it->second.second;
    }

    struct Mode {
        std::vector<double> position;
        std::size_t support = 0;
    };
    std::vector<Mode> modes;
    const double stop = 1e-3 * bandwidth;
    std::vector<double> next(d);
    for (auto& [bin_key, sum_count] : bins) {
        std::vector<double> pos(d);
        for (std::size_t j = 0; j < d; ++j)
            pos[j] = sum_count.first[j] / static_cast<double>(sum_count.second);
        std::size_t within = 0;
        for (int iter = 0; iter < opt.max_iter; ++iter) {
            std::fill(next.begin(), next.end(), 0.0);
            within = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = m.row(i);
                if (euclidean_distance({pos.data(), d}, row) <= bandwidth) {
                    for (std::size_t j = 0; j < d; ++j) next[j] += row[j];
                    ++within;
                }
            }
            if (within == 0) break;
            for (std::size_t j = 0; j < d; ++j) next[j] /= static_cast<double>(within);
            const double shift = euclidean_distance({pos.data(), d}, {next.data(), d});
            pos = next;
            if (shift < stop) break;
        }
        if (within > 0) modes.push_back({std::move(pos), within});
    }

    // Merge modes closer than the bandwidth, strongest support first.
    std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        if (a.support != b.support) return a.support > b.support;
        return a.position < b.position;
    });
    std::vector<Mode> kept;
    for (auto& mode : modes) {
        bool merged = false;
        for (const auto& keep : kept) {
            if (euclidean_distance({mode.position.data(), d}, {keep.position.data(), d}) < bandwidth) {
                merged = true;
                break;
            }
        }
        if (!merged) kept.push_back(std::move(mode));
    }
    if (kept.empty()) {
        result.labels.assign(n, 0);
        result.k_found = 1;
        return result;
    }

    result.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t c = 0; c < kept.size(); ++c) {
            const double dist = squared_distance(m.row(i), {kept[c].position.data(), d});
            if (dist < best) {
                best = dist;
                best_c = static_cast<int>(c);
            }
        }
        result.labels[i] = best_c;
    }
    result.k_found = detail::compact_labels(result.labels, static_cast<int>(kept.size()));
    return result;
}

}  // namespace autocluster
