#include "autocluster/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "autocluster/util.hpp"

namespace autocluster {

namespace {

// Remaps labels onto dense ids [0, k) ordered by first appearance, so empty
// cluster ids never leak into the metrics.
std::pair<std::vector<int>, int> dense_labels(const std::vector<int>& labels) {
    std::vector<int> out(labels.size());
    std::vector<int> remap;
    int next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int lbl = labels[i];
        if (lbl < 0) throw std::invalid_argument("labels must be non-negative");
        if (static_cast<std::size_t>(lbl) >= remap.size())
            remap.resize(static_cast<std::size_t>(lbl) + 1, -1);
        if (remap[static_cast<std::size_t>(lbl)] < 0) remap[static_cast<std::size_t>(lbl)] = next++;
        out[i] = remap[static_cast<std::size_t>(lbl)];
    }
    return {std::move(out), next};
}

}  // namespace

SilhouetteResult silhouette(const FeatureMatrix& m, const std::vector<int>& raw_labels) {
    const std::size_t n = m.rows();
    if (raw_labels.size() != n) throw std::invalid_argument("silhouette: label/row mismatch");
    const auto [labels, k] = dense_labels(raw_labels);
    if (k < 2) throw std::invalid_argument("silhouette: needs at least 2 clusters");
    const auto uk = static_cast<std::size_t>(k);

    std::vector<std::size_t> sizes(uk, 0);
    for (int lbl : labels) ++sizes[static_cast<std::size_t>(lbl)];

    SilhouetteResult out;
    out.samples.assign(n, 0.0);
    std::vector<double> dist_sum(n * uk, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = euclidean_distance(m.row(i), m.row(j));
            dist_sum[i * uk + static_cast<std::size_t>(labels[j])] += dij;
            dist_sum[j * uk + static_cast<std::size_t>(labels[i])] += dij;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (sizes[own] <= 1) {
            out.samples[i] = 0.0;  // singleton convention
            continue;
        }
        const double a = dist_sum[i * uk + own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < uk; ++c) {
            if (c == own || sizes[c] == 0) continue;
            b = std::min(b, dist_sum[i * uk + c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        out.samples[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }

    out.cluster_scores.assign(uk, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        out.cluster_scores[static_cast<std::size_t>(labels[i])] += out.samples[i];
    for (std::size_t c = 0; c < uk; ++c)
        if (sizes[c] > 0) out.cluster_scores[c] /= static_cast<double>(sizes[c]);
    out.si = vec_mean(out.samples);
    return out;
}

double bsi(const std::vector<double>& cluster_scores, const std::vector<double>& weights) {
    if (cluster_scores.empty()) throw std::invalid_argument("bsi: no clusters");
    if (!weights.empty() && weights.size() != cluster_scores.size())
        throw std::invalid_argument("bsi: weight count mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < cluster_scores.size(); ++c) {
        const double w = weights.empty() ? 1.0 : weights[c];
        if (w <= 0.0) throw std::invalid_argument("bsi: weights must be > 0");
        num += w * cluster_scores[c];
        den += w;
    }
    return num / den;
}

double sigma_sk(const std::vector<double>& cluster_scores, double bsi_value,
                const std::vector<double>& weights) {
    if (cluster_scores.empty()) throw std::invalid_argument("sigma_sk: no clusters");
    if (!weights.empty() && weights.size() != cluster_scores.size())
        throw std::invalid_argument("sigma_sk: weight count mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < cluster_scores.size(); ++c) {
        const double w = weights.empty() ? 1.0 : weights[c];
        const double dev = cluster_scores[c] - bsi_value;
        num += w * dev * dev;
        den += w;
    }
    return std::sqrt(num / den);
}

double calinski_harabasz(const FeatureMatrix& m, const std::vector<int>& raw_labels) {
    const std::size_t n = m.rows(), d = m.cols();
    const auto [labels, k] = dense_labels(raw_labels);
    if (k < 2) throw std::invalid_argument("calinski_harabasz: needs at least 2 clusters");
    const auto uk = static_cast<std::size_t>(k);

    std::vector<double> centroids(uk * d, 0.0), global(d, 0.0);
    std::vector<std::size_t> sizes(uk, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        const auto row = m.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            centroids[c * d + j] += row[j];
            global[j] += row[j];
        }
        ++sizes[c];
    }
    for (std::size_t j = 0; j < d; ++j) global[j] /= static_cast<double>(n);
    for (std::size_t c = 0; c < uk; ++c)
        if (sizes[c] > 0)
            for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] /= static_cast<double>(sizes[c]);

    double tr_b = 0.0;
    for (std::size_t c = 0; c < uk; ++c)
        tr_b += static_cast<double>(sizes[c]) *
                squared_distance({centroids.data() + c * d, d}, {global.data(), d});
    double tr_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        tr_w += squared_distance(m.row(i), {centroids.data() + c * d, d});
    }
    if (tr_w == 0.0) return std::numeric_limits<double>::infinity();
    return tr_b / tr_w * static_cast<double>(n - uk) / static_cast<double>(uk - 1);
}

DaviesBouldinResult davies_bouldin(const FeatureMatrix& m, const std::vector<int>& raw_labels) {
    const std::size_t n = m.rows(), d = m.cols();
    const auto [labels, k] = dense_labels(raw_labels);
    if (k < 2) throw std::invalid_argument("davies_bouldin: needs at least 2 clusters");
    const auto uk = static_cast<std::size_t>(k);

    std::vector<double> centroids(uk * d, 0.0), scatter(uk, 0.0);
    std::vector<std::size_t> sizes(uk, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        const auto row = m.row(i);
        for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] += row[j];
        ++sizes[c];
    }
    for (std::size_t c = 0; c < uk; ++c)
        if (sizes[c] > 0)
            for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] /= static_cast<double>(sizes[c]);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        scatter[c] += euclidean_distance(m.row(i), {centroids.data() + c * d, d});
    }
    for (std::size_t c = 0; c < uk; ++c)
        if (sizes[c] > 0) scatter[c] /= static_cast<double>(sizes[c]);

    DaviesBouldinResult out;
    double total = 0.0;
    for (std::size_t i = 0; i < uk; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < uk; ++j) {
            if (i == j) continue;
            const double dc = euclidean_distance({centroids.data() + i * d, d},
                                                 {centroids.data() + j * d, d});
            double term;
            if (dc == 0.0) {
                term = std::numeric_limits<double>::infinity();
                out.coincident_centroids = true;
            } else {
                term = (scatter[i] + scatter[j]) / dc;
            }
            worst = std::max(worst, term);
        }
        total += worst;
    }
    out.value = total / static_cast<double>(uk);
    return out;
}

int boundary_count(const std::vector<double>& sample_silhouettes, double tol) {
    int count = 0;
    for (double s : sample_silhouettes)
        if (std::abs(s) < tol) ++count;
    return count;
}

QualityReport quality_report(const FeatureMatrix& m, const std::vector<int>& labels,
                             const std::vector<double>& weights, double boundary_tol) {
    QualityReport report;
    const auto sil = silhouette(m, labels);
    report.sample_silhouettes = sil.samples;
    report.cluster_scores = sil.cluster_scores;
    report.si = sil.si;
    report.bsi = bsi(sil.cluster_scores, weights);
    report.sigma_sk = sigma_sk(sil.cluster_scores, report.bsi, weights);
    report.ch = calinski_harabasz(m, labels);
    const auto db = davies_bouldin(m, labels);
    report.db = db.value;
    report.db_degenerate = db.coincident_centroids;
    report.boundary_count = boundary_count(sil.samples, boundary_tol);
    report.k = static_cast<int>(sil.cluster_scores.size());
    return report;
}

double coefficient_of_variation(const std::vector<double>& values, double beta, int norm) {
    if (values.size() < 2) throw std::invalid_argument("coefficient_of_variation: need >= 2 values");
    if (norm != 1 && norm != 2) throw std::invalid_argument("coefficient_of_variation: norm must be 1 or 2");
    const double mean = vec_mean(values);
    double acc = 0.0;
    for (double v : values) {
        const double dev = std::abs(v - mean);
        acc += norm == 1 ? dev : dev * dev;
    }
    acc /= static_cast<double>(values.size());
    const double dispersion = norm == 1 ? acc : std::sqrt(acc);
    const double denom = beta + mean;
    if (dispersion == 0.0) return 0.0;
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return dispersion / denom;
}

StabilityReport stability_cv(const std::vector<ModelSpec>& settings, const FeatureMatrix& m,
                             const StabilityConfig& cfg) {
    if (cfg.replicates < 2) throw std::invalid_argument("stability_cv: need at least 2 replicates");
    StabilityReport report;
    report.settings.resize(settings.size());

    parallel_for(settings.size(), [&](std::size_t s) {
        StabilitySetting entry;
        entry.spec = settings[s];
        for (int t = 1; t <= cfg.replicates; ++t) {
            try {
                const auto result = fit(entry.spec.with_seed(entry.spec.seed + static_cast<std::uint64_t>(t)), m);
                const auto sil = silhouette(m, result.labels);
                const double b = bsi(sil.cluster_scores);
                entry.replicate_bsi.push_back(b);
                entry.replicate_sigma.push_back(sigma_sk(sil.cluster_scores, b));
            } catch (const std::exception&) {
                entry.failed = true;
                break;
            }
        }
        if (entry.failed) {
            entry.cv_bsi = entry.cv_sigma = std::numeric_limits<double>::infinity();
        } else {
            entry.cv_bsi = coefficient_of_variation(entry.replicate_bsi, cfg.beta, cfg.norm);
            entry.cv_sigma = coefficient_of_variation(entry.replicate_sigma, cfg.beta, cfg.norm);
        }
        report.settings[s] = std::move(entry);
    });

    double sum_bsi = 0.0, sum_sigma = 0.0;
    for (const auto& entry : report.settings) {
        sum_bsi += entry.cv_bsi;
        sum_sigma += entry.cv_sigma;
    }
    const auto count = static_cast<double>(report.settings.size());
    report.mean_cv_bsi = report.settings.empty() ? 0.0 : sum_bsi / count;
    report.mean_cv_sigma = report.settings.empty() ? 0.0 : sum_sigma / count;
    return report;
}

}  // namespace autocluster
