#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"
#include "internal.hpp"

namespace autocluster {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// k-means++ seeding: centers drawn proportional to squared distance from the
// nearest already-chosen center.
std::vector<double> kmeanspp_init(const FeatureMatrix& m, int k, std::mt19937_64& rng) {
    const std::size_t n = m.rows(), d = m.cols();
    std::vector<double> centers(static_cast<std::size_t>(k) * d);
    const std::size_t first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    const auto frow = m.row(std::min(first, n - 1));
    std::copy(frow.begin(), frow.end(), centers.begin());

    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i)
        dist2[i] = squared_distance(m.row(i), {centers.data(), d});

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : dist2) total += v;
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
            chosen = std::min(chosen, n - 1);
        }
        auto dst = centers.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * d);
        const auto row = m.row(chosen);
        std::copy(row.begin(), row.end(), dst);
        for (std::size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], squared_distance(m.row(i), {&*dst, d}));
    }
    return centers;
}

std::span<const double> center_at(const std::vector<double>& centers, std::size_t c, std::size_t d) {
    return {centers.data() + c * d, d};
}

void compute_means(const FeatureMatrix& m, const std::vector<int>& labels, int k,
                   std::vector<double>& centers, std::vector<std::size_t>& counts) {
    const std::size_t n = m.rows(), d = m.cols();
    std::fill(centers.begin(), centers.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        const auto row = m.row(i);
        for (std::size_t j = 0; j < d; ++j) centers[c * d + j] += row[j];
        ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c)
        if (counts[c] > 0)
            for (std::size_t j = 0; j < d; ++j) centers[c * d + j] /= static_cast<double>(counts[c]);
}

// Re-seeds each empty cluster at the point farthest from its assigned center.
// Returns true if any cluster was re-seeded.
bool reseed_empty(const FeatureMatrix& m, std::vector<int>& labels, std::vector<double>& centers,
                  std::vector<std::size_t>& counts, int k) {
    const std::size_t n = m.rows(), d = m.cols();
    bool reseeded = false;
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
        if (counts[c] > 0) continue;
        double worst = -1.0;
        std::size_t worst_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[static_cast<std::size_t>(labels[i])] <= 1) continue;  // keep donors nonempty
            const double dd =
                squared_distance(m.row(i), center_at(centers, static_cast<std::size_t>(labels[i]), d));
            if (dd > worst) {
                worst = dd;
                worst_i = i;
            }
        }
        if (worst < 0.0) return reseeded;  // nothing left to donate
        --counts[static_cast<std::size_t>(labels[worst_i])];
        labels[worst_i] = static_cast<int>(c);
        counts[c] = 1;
        const auto row = m.row(worst_i);
        std::copy(row.begin(), row.end(), centers.begin() + static_cast<std::ptrdiff_t>(c * d));
        reseeded = true;
    }
    return reseeded;
}

struct CoreOutcome {
    std::vector<int> labels;
    bool converged = false;
    int iterations = 0;
    bool reseeded = false;
};

CoreOutcome lloyd_core(const FeatureMatrix& m, int k, std::vector<double> centers, int max_iter) {
    const std::size_t n = m.rows(), d = m.cols();
    std::vector<int> labels(n, 0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    CoreOutcome out;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                const double dd = squared_distance(m.row(i), center_at(centers, static_cast<std::size_t>(c), d));
                if (dd < best) {
                    best = dd;
                    best_c = c;
                }
            }
            if (labels[i] != best_c || iter == 0) {
                changed = changed || labels[i] != best_c || iter == 0;
                labels[i] = best_c;
            }
        }
        compute_means(m, labels, k, centers, counts);
        if (reseed_empty(m, labels, centers, counts, k)) {
            out.reseeded = true;
            compute_means(m, labels, k, centers, counts);
            changed = true;
        }
        out.iterations = iter + 1;
        if (!changed) {
            out.converged = true;
            break;
        }
    }
    out.labels = std::move(labels);
    return out;
}

// Elkan's triangle-inequality accelerated k-means. Pure acceleration: with the
// same initial centers it walks the same fixed-point sequence as lloyd_core.
CoreOutcome elkan_core(const FeatureMatrix& m, int k, std::vector<double> centers, int max_iter) {
    const std::size_t n = m.rows(), d = m.cols();
    const auto uk = static_cast<std::size_t>(k);
    std::vector<int> labels(n, 0);
    std::vector<double> upper(n), lower(n * uk);
    std::vector<std::size_t> counts(uk, 0);
    CoreOutcome out;

    // Exact initial assignment, bounds tight.
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < k; ++c) {
            const double dist = euclidean_distance(m.row(i), center_at(centers, static_cast<std::size_t>(c), d));
            lower[i * uk + static_cast<std::size_t>(c)] = dist;
            if (dist < best) {
                best = dist;
                best_c = c;
            }
        }
        labels[i] = best_c;
        upper[i] = best;
    }

    std::vector<double> cc(uk * uk), s(uk), new_centers(uk * d), delta(uk);
    for (int iter = 0; iter < max_iter; ++iter) {
        // Half of the distance to the closest other center.
        for (std::size_t a = 0; a < uk; ++a) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < uk; ++b) {
                if (a == b) continue;
                const double dist = euclidean_distance(center_at(centers, a, d), center_at(centers, b, d));
                cc[a * uk + b] = dist;
                nearest = std::min(nearest, dist);
            }
            s[a] = 0.5 * nearest;
        }

        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto a = static_cast<std::size_t>(labels[i]);
            if (upper[i] <= s[a]) continue;
            bool tight = false;
            for (int c = 0; c < k; ++c) {
                const auto uc = static_cast<std::size_t>(c);
                if (uc == a) continue;
                if (upper[i] <= lower[i * uk + uc] || upper[i] <= 0.5 * cc[a * uk + uc]) continue;
                if (!tight) {
                    upper[i] = euclidean_distance(m.row(i), center_at(centers, a, d));
                    lower[i * uk + a] = upper[i];
                    tight = true;
                    if (upper[i] <= lower[i * uk + uc] || upper[i] <= 0.5 * cc[a * uk + uc]) continue;
                }
                const double dist = euclidean_distance(m.row(i), center_at(centers, uc, d));
                lower[i * uk + uc] = dist;
                if (dist < upper[i]) {
                    labels[i] = c;
                    a = uc;
                    upper[i] = dist;
                    changed = true;
                }
            }
        }

        compute_means(m, labels, k, new_centers, counts);
        if (reseed_empty(m, labels, new_centers, counts, k)) {
            out.reseeded = true;
            compute_means(m, labels, k, new_centers, counts);
            changed = true;
            // Bounds are stale after a reseed; recompute exactly.
            centers = new_centers;
            for (std::size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int best_c = 0;
                for (int c = 0; c < k; ++c) {
                    const double dist =
                        euclidean_distance(m.row(i), center_at(centers, static_cast<std::size_t>(c), d));
                    lower[i * uk + static_cast<std::size_t>(c)] = dist;
                    if (dist < best) {
                        best = dist;
                        best_c = c;
                    }
                }
                labels[i] = best_c;
                upper[i] = best;
            }
            out.iterations = iter + 1;
            continue;
        }
        out.iterations = iter + 1;
        if (!changed) {
            out.converged = true;
            break;
        }
        for (std::size_t c = 0; c < uk; ++c)
            delta[c] = euclidean_distance(center_at(centers, c, d), center_at(new_centers, c, d));
        for (std::size_t i = 0; i < n; ++i) {
            upper[i] += delta[static_cast<std::size_t>(labels[i])];
            for (std::size_t c = 0; c < uk; ++c)
                lower[i * uk + c] = std::max(0.0, lower[i * uk + c] - delta[c]);
        }
        centers = new_centers;
    }
    out.labels = std::move(labels);
    return out;
}

}  // namespace

ClusteringResult kmeans_pp(const FeatureMatrix& m, int k, const KMeansOptions& opt,
                           std::uint64_t seed) {
    const std::size_t n = m.rows();
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("kmeans: k > n");
    std::mt19937_64 rng(seed);
    const int n_init = std::max(1, opt.n_init);

    ClusteringResult best;
    double best_wcss = std::numeric_limits<double>::infinity();
    for (int init = 0; init < n_init; ++init) {
        auto centers = kmeanspp_init(m, k, rng);
        const CoreOutcome run = opt.elkan ? elkan_core(m, k, std::move(centers), opt.max_iter)
                                          : lloyd_core(m, k, std::move(centers), opt.max_iter);
        const double score = wcss(m, run.labels, k);
        if (score < best_wcss) {
            best_wcss = score;
            best.labels = run.labels;
            best.converged = run.converged;
            best.iterations = run.iterations;
            best.empty_cluster_collapsed = run.reseeded;
        }
    }
    best.k_found = k;
    return best;
}

ClusteringResult minibatch_kmeans(const FeatureMatrix& m, int k, const MiniBatchOptions& opt,
                                  std::uint64_t seed) {
    const std::size_t n = m.rows(), d = m.cols();
    if (k < 1) throw std::invalid_argument("minibatch_kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("minibatch_kmeans: k > n");
    std::mt19937_64 rng(seed);
    const std::size_t batch =
        opt.batch_size > 0 ? static_cast<std::size_t>(opt.batch_size)
                           : std::max<std::size_t>(256, n / 10);
    const int n_init = std::max(1, opt.n_init);

    ClusteringResult best;
    double best_wcss = std::numeric_limits<double>::infinity();
    for (int init = 0; init < n_init; ++init) {
        auto centers = kmeanspp_init(m, k, rng);
        std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
        for (int iter = 0; iter < opt.max_iter; ++iter) {
            for (std::size_t b = 0; b < std::min(batch, n); ++b) {
                const auto i = static_cast<std::size_t>(rng() % n);
                const auto row = m.row(i);
                double bestd = std::numeric_limits<double>::infinity();
                std::size_t best_c = 0;
                for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
                    const double dd = squared_distance(row, {centers.data() + c * d, d});
                    if (dd < bestd) {
                        bestd = dd;
                        best_c = c;
                    }
                }
                counts[best_c] += 1.0;
                const double eta = 1.0 / counts[best_c];
                for (std::size_t j = 0; j < d; ++j)
                    centers[best_c * d + j] += eta * (row[j] - centers[best_c * d + j]);
            }
        }
        std::vector<int> labels(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = m.row(i);
            double bestd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dd = squared_distance(row, {centers.data() + static_cast<std::size_t>(c) * d, d});
                if (dd < bestd) {
                    bestd = dd;
                    labels[i] = c;
                }
            }
        }
        const double score = wcss(m, labels, k);
        if (score < best_wcss) {
            best_wcss = score;
            best.labels = std::move(labels);
            best.iterations = opt.max_iter;
        }
    }
    // Compact away clusters that ended up empty on the full assignment.
    best.k_found = detail::compact_labels(best.labels, k);
    best.empty_cluster_collapsed = best.k_found < k;
    best.converged = true;
    return best;
}

}  // namespace autocluster
