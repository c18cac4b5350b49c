#include <stdexcept>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"

namespace autocluster {

const std::vector<Algorithm>& all_algorithms() {
    static const std::vector<Algorithm> algos = {
        Algorithm::kmeans_pp,  Algorithm::minibatch_kmeans, Algorithm::fuzzy_c_means,
        Algorithm::mean_shift, Algorithm::ward,             Algorithm::average_linkage,
        Algorithm::birch,      Algorithm::dbscan,
    };
    return algos;
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::kmeans_pp: return "kmeans_pp";
        case Algorithm::minibatch_kmeans: return "minibatch_kmeans";
        case Algorithm::fuzzy_c_means: return "fuzzy_c_means";
        case Algorithm::mean_shift: return "mean_shift";
        case Algorithm::ward: return "ward";
        case Algorithm::average_linkage: return "average_linkage";
        case Algorithm::birch: return "birch";
        case Algorithm::dbscan: return "dbscan";
    }
    throw std::logic_error("unreachable algorithm enum");
}

Algorithm algorithm_from_name(const std::string& name) {
    for (Algorithm a : all_algorithms())
        if (algorithm_name(a) == name) return a;
    throw std::invalid_argument("unknown algorithm: " + name);
}

bool is_k_demanding(Algorithm a) {
    switch (a) {
        case Algorithm::mean_shift:
        case Algorithm::dbscan: return false;
        default: return true;
    }
}

bool is_stochastic(Algorithm a) {
    switch (a) {
        case Algorithm::kmeans_pp:
        case Algorithm::minibatch_kmeans:
        case Algorithm::fuzzy_c_means: return true;
        default: return false;
    }
}

double hyper_number(const HyperMap& h, const std::string& key, double fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    if (const double* v = std::get_if<double>(&it->second)) return *v;
    throw std::invalid_argument("hyperparameter " + key + " must be numeric");
}

std::string hyper_string(const HyperMap& h, const std::string& key, const std::string& fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
    throw std::invalid_argument("hyperparameter " + key + " must be a string");
}

double wcss(const FeatureMatrix& m, const std::vector<int>& labels, int k) {
    const std::size_t n = m.rows(), d = m.cols();
    std::vector<double> centers(static_cast<std::size_t>(k) * d, 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = m.row(i);
        const auto c = static_cast<std::size_t>(labels[i]);
        for (std::size_t j = 0; j < d; ++j) centers[c * d + j] += row[j];
        ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c)
        if (counts[c] > 0)
            for (std::size_t j = 0; j < d; ++j) centers[c * d + j] /= static_cast<double>(counts[c]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        total += squared_distance(m.row(i), {centers.data() + c * d, d});
    }
    return total;
}

ClusteringResult fit(const ModelSpec& spec, const FeatureMatrix& m) {
    if (m.state != MatrixState::standardized)
        throw std::invalid_argument("fit: feature matrix must be standardized");
    if (m.rows() == 0) throw std::invalid_argument("fit: empty matrix");
    const auto& h = spec.hyperparameters;
    int k = 0;
    if (is_k_demanding(spec.algorithm)) {
        if (!spec.k) throw std::invalid_argument("fit: k required for " + algorithm_name(spec.algorithm));
        k = *spec.k;
        if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
    }
    switch (spec.algorithm) {
        case Algorithm::kmeans_pp: {
            KMeansOptions opt;
            opt.n_init = static_cast<int>(hyper_number(h, "n_init", 10));
            opt.elkan = hyper_string(h, "core", "em-style") == "elkan";
            opt.max_iter = static_cast<int>(hyper_number(h, "max_iter", 300));
            return kmeans_pp(m, k, opt, spec.seed);
        }
        case Algorithm::minibatch_kmeans: {
            MiniBatchOptions opt;
            opt.n_init = static_cast<int>(hyper_number(h, "n_init", 1));
            opt.batch_size = static_cast<int>(hyper_number(h, "batch_size", 0));
            opt.max_iter = static_cast<int>(hyper_number(h, "max_iter", 100));
            return minibatch_kmeans(m, k, opt, spec.seed);
        }
        case Algorithm::fuzzy_c_means: {
            FuzzyOptions opt;
            opt.fuzzifier = hyper_number(h, "m", 2.0);
            opt.tol = hyper_number(h, "tol", 1e-4);
            opt.max_iter = static_cast<int>(hyper_number(h, "max_iter", 300));
            return fuzzy_c_means(m, k, opt, spec.seed);
        }
        case Algorithm::mean_shift: {
            MeanShiftOptions opt;
            opt.bandwidth_quantile = hyper_number(h, "quantile", 0.3);
            return mean_shift(m, opt);
        }
        case Algorithm::ward:
        case Algorithm::average_linkage: {
            std::optional<int> conn;
            const double c = hyper_number(h, "connectivity_neighbours", -1.0);
            if (c > 0) conn = static_cast<int>(c);
            const Linkage link =
                spec.algorithm == Algorithm::ward ? Linkage::ward : Linkage::average;
            return agglomerative(m, k, link, conn);
        }
        case Algorithm::birch: {
            BirchOptions opt;
            opt.threshold = hyper_number(h, "threshold", 0.5);
            opt.branching = static_cast<int>(hyper_number(h, "branching", 50));
            return birch(m, k, opt);
        }
        case Algorithm::dbscan: {
            DbscanOptions opt;
            opt.eps = hyper_number(h, "eps", 1.5);
            opt.min_pts = static_cast<int>(hyper_number(h, "min_pts", 5));
            return dbscan(m, opt);
        }
    }
    throw std::logic_error("unreachable algorithm dispatch");
}

}  // namespace autocluster
