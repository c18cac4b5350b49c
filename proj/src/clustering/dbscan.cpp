#include <deque>
#include <limits>
#include <stdexcept>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"

namespace autocluster {

ClusteringResult dbscan(const FeatureMatrix& m, const DbscanOptions& opt) {
    const std::size_t n = m.rows();
    if (n == 0) throw std::invalid_argument("dbscan: empty matrix");
    if (opt.eps <= 0.0) throw std::invalid_argument("dbscan: eps must be > 0");
    if (opt.min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");

    const double eps2 = opt.eps * opt.eps;
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i) {
        neighbours[i].push_back(i);  // a point counts towards its own density
        for (std::size_t j = i + 1; j < n; ++j) {
            if (squared_distance(m.row(i), m.row(j)) <= eps2) {
                neighbours[i].push_back(j);
                neighbours[j].push_back(i);
            }
        }
    }
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i)
        core[i] = neighbours[i].size() >= static_cast<std::size_t>(opt.min_pts);

    constexpr int kUnvisited = -1;
    std::vector<int> labels(n, kUnvisited);
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kUnvisited || !core[i]) continue;
        const int cluster = next_cluster++;
        std::deque<std::size_t> frontier{i};
        labels[i] = cluster;
        while (!frontier.empty()) {
            const std::size_t p = frontier.front();
            frontier.pop_front();
            if (!core[p]) continue;
            for (std::size_t q : neighbours[p]) {
                if (labels[q] != kUnvisited) continue;
                labels[q] = cluster;
                if (core[q]) frontier.push_back(q);
            }
        }
    }

    ClusteringResult result;
    result.noise_flags.assign(n, false);
    if (next_cluster == 0) {
        // No dense region anywhere; the pipeline still needs total labelling.
        result.labels.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) result.noise_flags[i] = true;
        result.k_found = 1;
        return result;
    }
    // Noise keeps its flag but is assigned the cluster of the nearest
    // clustered point so downstream CVIs see a total labelling.
    const std::vector<int> assigned = labels;
    for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i] != kUnvisited) continue;
        result.noise_flags[i] = true;
        double best = std::numeric_limits<double>::infinity();
        int best_label = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (assigned[j] == kUnvisited) continue;
            const double dd = squared_distance(m.row(i), m.row(j));
            if (dd < best) {
                best = dd;
                best_label = assigned[j];
            }
        }
        labels[i] = best_label;
    }
    result.labels = std::move(labels);
    result.k_found = next_cluster;
    return result;
}

}  // namespace autocluster
