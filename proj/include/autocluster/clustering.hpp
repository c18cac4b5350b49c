#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "autocluster/features.hpp"

namespace autocluster {

enum class Algorithm {
    kmeans_pp,
    minibatch_kmeans,
    fuzzy_c_means,
    mean_shift,
    ward,
    average_linkage,
    birch,
    dbscan,
};

const std::vector<Algorithm>& all_algorithms();
std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// True when the algorithm takes the cluster count as an input.
bool is_k_demanding(Algorithm a);
// True when repeated fits with different seeds can differ.
bool is_stochastic(Algorithm a);

using HyperValue = std::variant<double, std::string>;
using HyperMap = std::map<std::string, HyperValue>;

double hyper_number(const HyperMap& h, const std::string& key, double fallback);
std::string hyper_string(const HyperMap& h, const std::string& key, const std::string& fallback);

// One point in the search space.
struct ModelSpec {
    Algorithm algorithm = Algorithm::kmeans_pp;
    std::optional<int> k;       // required for k-demanding algorithms
    HyperMap hyperparameters;
    std::uint64_t seed = 0;

    ModelSpec with_seed(std::uint64_t s) const {
        ModelSpec copy = *this;
        copy.seed = s;
        return copy;
    }
};

struct ClusteringResult {
    std::vector<int> labels;                         // [0, k_found)
    std::vector<std::vector<double>> memberships;    // fuzzy only; rows sum to 1
    std::vector<bool> noise_flags;                   // dbscan only
    int k_found = 0;
    bool converged = true;
    int iterations = 0;
    bool empty_cluster_collapsed = false;
};

// Dispatches to the algorithm named by the spec. Deterministic in
// (spec.seed, m). Requires a standardized matrix.
ClusteringResult fit(const ModelSpec& spec, const FeatureMatrix& m);

// --- individual algorithms (exposed for direct testing) ---

struct KMeansOptions {
    int n_init = 10;
    bool elkan = false;  // acceleration only; labels match the EM-style path
    int max_iter = 300;
};
ClusteringResult kmeans_pp(const FeatureMatrix& m, int k, const KMeansOptions& opt,
                           std::uint64_t seed);

struct MiniBatchOptions {
    int n_init = 1;
    int batch_size = 0;  // 0 = max(256, n/10)
    int max_iter = 100;  // batches per init
};
ClusteringResult minibatch_kmeans(const FeatureMatrix& m, int k, const MiniBatchOptions& opt,
                                  std::uint64_t seed);

struct FuzzyOptions {
    double fuzzifier = 2.0;  // (1, inf); search domain uses (1.1, 4.0]
    double tol = 1e-4;       // max membership change
    int max_iter = 300;
};
ClusteringResult fuzzy_c_means(const FeatureMatrix& m, int k, const FuzzyOptions& opt,
                               std::uint64_t seed);

struct MeanShiftOptions {
    double bandwidth_quantile = 0.3;  // (0.1, 1.0)
    int max_iter = 300;
};
ClusteringResult mean_shift(const FeatureMatrix& m, const MeanShiftOptions& opt);

enum class Linkage { ward, average };
ClusteringResult agglomerative(const FeatureMatrix& m, int k, Linkage linkage,
                               std::optional<int> connectivity_neighbours = std::nullopt);

struct BirchOptions {
    double threshold = 0.5;   // sub-cluster radius bound
    int branching = 50;       // max CF entries per node
};
ClusteringResult birch(const FeatureMatrix& m, int k, const BirchOptions& opt);

struct DbscanOptions {
    double eps = 1.5;
    int min_pts = 5;
};
// Noise points keep their flag and are assigned the label of the nearest
// clustered point so every row carries a label.
ClusteringResult dbscan(const FeatureMatrix& m, const DbscanOptions& opt);

// Within-cluster sum of squares for a hard labelling; shared by the k-means
// variants when picking the best restart.
double wcss(const FeatureMatrix& m, const std::vector<int>& labels, int k);

}  // namespace autocluster
