#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autocluster/clustering.hpp"
#include "autocluster/evaluation.hpp"
#include "autocluster/tpe.hpp"

namespace autocluster {

struct ParamDomain {
    std::string name;
    tpe::DimKind kind;
    std::vector<std::string> choices;  // labels for categorical dimensions
};

struct AlgorithmSpace {
    Algorithm algorithm;
    std::vector<ParamDomain> params;
};

// Joint (algorithm, hyperparameters, k) domain. k is shared by the
// k-demanding algorithms.
struct SearchSpace {
    std::vector<AlgorithmSpace> algorithms;
    int k_min = 3;
    int k_max = 9;

    static SearchSpace defaults();  // the full portfolio's declared domains
    // Restriction to a shortlist, preserving the declared domains.
    SearchSpace restricted_to(const std::vector<Algorithm>& shortlist) const;
    const AlgorithmSpace& domain_of(Algorithm a) const;
    bool contains(const ModelSpec& spec) const;
};

// Empirical default hyperparameters used by the prescreen stage.
HyperMap default_hyperparameters(Algorithm a);

// loss(x) = (s* - bSI) + lambda * sigma(S_k) + phi * c_V
struct LossWeights {
    double s_star = 1.0;
    double lambda = 0.5;
    double phi = 1.0;
};

double loss(double bsi_value, double sigma_value, double cv, const LossWeights& w);

struct TrialQuality {
    double bsi = 0.0;
    double sigma_sk = 0.0;
    double si = 0.0;
    double ch = 0.0;
    double db = 0.0;
    int boundary_count = 0;
};

struct TrialRecord {
    ModelSpec spec;
    TrialQuality quality;
    double cv = 0.0;
    double loss_x = 0.0;
    double loss_conditional = 0.0;
    int iteration = 0;
    int k = 0;           // requested k, or k_found for emergent-k algorithms
    bool stable = true;  // cv < tau; unstable trials never enter the good split
    bool failed = false; // degenerate fit (e.g. single cluster); no usable loss
};

struct BestPerK {
    int k = 0;
    TrialRecord trial;
    double cv_recheck = 0.0;  // full-replicate stability of the winning spec
};

class TuneHistory {
  public:
    explicit TuneHistory(LossWeights weights = {}) : weights_(weights) {}

    // Computes loss_conditional for the trial, updates the running per-k mean
    // and appends. Failed trials are recorded but excluded from loss(k).
    void append(TrialRecord trial);

    const std::vector<TrialRecord>& trials() const { return trials_; }
    const LossWeights& weights() const { return weights_; }

    // Running mean of loss_x over non-failed trials at this k; nullopt when
    // the k is unseen.
    std::optional<double> loss_k(int k) const;
    // Batch recomputation of loss_k, for verifying the incremental update.
    std::optional<double> loss_k_batch(int k) const;

    std::vector<BestPerK> best_per_k() const;

  private:
    LossWeights weights_;
    std::vector<TrialRecord> trials_;
    std::map<int, std::pair<double, std::size_t>> loss_sums_;  // k -> (sum, count)
};

// loss(x|k): the trial's loss_x over the running mean loss at its k with the
// trial itself included. Self-normalizes to 1 for the first trial at a k.
double conditional_loss(const TuneHistory& history, const TrialRecord& trial);

struct TuneOptions {
    int iterations = 1000;
    std::uint64_t seed = 7;
    LossWeights weights;
    double gamma = 0.25;
    int n_candidates = 24;
    std::size_t n_startup = 20;
    int stability_replicates = 3;  // quick c_V during tuning; 10 on the final recheck
    int final_replicates = 10;
    double tau = 0.05;
    double beta = 1.0;
    int norm = 2;
    std::vector<double> cluster_weights;  // w_k for bSI; empty = equal
};

// One TPE suggestion from the recorded history (startup phase samples the
// space uniformly).
ModelSpec tpe_suggest(const TuneHistory& history, const SearchSpace& space, double gamma,
                      int n_candidates, std::uint64_t seed);
ModelSpec tpe_suggest(const TuneHistory& history, const SearchSpace& space,
                      const tpe::TpeConfig& cfg, std::mt19937_64& rng);

// Full TPE loop: suggest, fit, evaluate, estimate stability, record.
TuneHistory optimize(const SearchSpace& space, const FeatureMatrix& m, const TuneOptions& opt);

// Best-per-k table with the winning specs' stability re-measured at the full
// replicate count (quick triplicate estimates are used during tuning).
std::vector<BestPerK> finalize_best_per_k(const TuneHistory& history, const FeatureMatrix& m,
                                          const TuneOptions& opt);

struct PrescreenRow {
    Algorithm algorithm;
    double cv_bsi = 0.0;
    double cv_sigma = 0.0;
    double mean_bsi = 0.0;
    double mean_sigma = 0.0;
    double combined_rank = 0.0;
    bool discarded_unstable = false;
    bool kept = false;
};

struct PrescreenResult {
    std::vector<Algorithm> shortlist;  // ordered by combined rank
    std::vector<PrescreenRow> rows;
    std::vector<std::string> warnings;
};

struct PrescreenOptions {
    int k_min = 3;
    int k_max = 9;
    int replicates = 10;
    double tau = 0.05;
    double beta = 1.0;
    int norm = 2;
    std::uint64_t seed = 7;
};

// Stage one: stability gate at tau, then rank survivors by mean bSI and mean
// sigma(S_k); keeps those at or above the 50th percentile of the combined rank.
PrescreenResult prescreen(const std::vector<Algorithm>& algorithms, const FeatureMatrix& m,
                          const PrescreenOptions& opt);

}  // namespace autocluster
