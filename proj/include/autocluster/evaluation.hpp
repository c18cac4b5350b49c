#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autocluster/clustering.hpp"
#include "autocluster/features.hpp"

namespace autocluster {

struct SilhouetteResult {
    std::vector<double> samples;         // s(i) in [-1, 1]
    std::vector<double> cluster_scores;  // S_k, mean s(i) per cluster
    double si = 0.0;                     // global mean
};

// Per-sample silhouettes on Euclidean distances. Singleton clusters take the
// neutral value s(i)=0. Throws if fewer than 2 clusters are present.
SilhouetteResult silhouette(const FeatureMatrix& m, const std::vector<int>& labels);

// Weighted mean of per-cluster silhouette scores; default weights are all 1.
double bsi(const std::vector<double>& cluster_scores, const std::vector<double>& weights = {});

// Weighted dispersion of S_k around bSI (population standard deviation when
// weights are equal).
double sigma_sk(const std::vector<double>& cluster_scores, double bsi_value,
                const std::vector<double>& weights = {});

double calinski_harabasz(const FeatureMatrix& m, const std::vector<int>& labels);

struct DaviesBouldinResult {
    double value = 0.0;
    bool coincident_centroids = false;  // some pairwise term degenerated to +inf
};
DaviesBouldinResult davies_bouldin(const FeatureMatrix& m, const std::vector<int>& labels);

// Rows with |s(i)| < tol sit on a cluster boundary.
int boundary_count(const std::vector<double>& sample_silhouettes, double tol = 0.05);

struct QualityReport {
    std::vector<double> sample_silhouettes;
    std::vector<double> cluster_scores;
    double bsi = 0.0;
    double sigma_sk = 0.0;
    double si = 0.0;
    double ch = 0.0;
    double db = 0.0;
    bool db_degenerate = false;
    int boundary_count = 0;
    int k = 0;
};

QualityReport quality_report(const FeatureMatrix& m, const std::vector<int>& labels,
                             const std::vector<double>& weights = {}, double boundary_tol = 0.05);

struct StabilityConfig {
    int replicates = 10;
    double beta = 1.0;  // damping added to the denominator
    int norm = 2;       // 2 = relative standard deviation, 1 = mean absolute deviation
};

// Stability of one model setting: coefficient of variation of the metric set
// {bSI, sigma(S_k)} across replicate fits with seeds seed+1..seed+T.
struct StabilitySetting {
    ModelSpec spec;
    double cv_bsi = 0.0;
    double cv_sigma = 0.0;
    std::vector<double> replicate_bsi;
    std::vector<double> replicate_sigma;
    bool failed = false;  // a replicate failed; treated as unstable (cv = +inf)

    double cv_max() const { return cv_bsi > cv_sigma ? cv_bsi : cv_sigma; }
};

struct StabilityReport {
    std::vector<StabilitySetting> settings;
    double mean_cv_bsi = 0.0;    // c_V(a): mean over settings
    double mean_cv_sigma = 0.0;

    double cv_max() const { return mean_cv_bsi > mean_cv_sigma ? mean_cv_bsi : mean_cv_sigma; }
};

// Coefficient of variation of replicate outcomes:
//   ((1/T) * sum |y_t - mean|^n)^(1/n) / (beta + mean)
double coefficient_of_variation(const std::vector<double>& values, double beta, int norm);

// Runs T replicate fits per setting and reports c_V per metric plus the
// per-algorithm mean across settings.
StabilityReport stability_cv(const std::vector<ModelSpec>& settings, const FeatureMatrix& m,
                             const StabilityConfig& cfg);

}  // namespace autocluster
