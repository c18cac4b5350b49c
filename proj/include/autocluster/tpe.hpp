#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace autocluster::tpe {

// Search-space dimension kinds. Quantized covers the stepped integer ranges
// (lo, lo+step, ..., capped at hi); categorical values are stored as indices.
struct Continuous {
    double lo;
    double hi;
};
struct Quantized {
    double lo;
    double hi;
    double step;
};
struct Categorical {
    std::size_t n;
};
using DimKind = std::variant<Continuous, Quantized, Categorical>;

double sample_uniform(const DimKind& kind, std::mt19937_64& rng);
double snap(const DimKind& kind, double value);
bool in_domain(const DimKind& kind, double value);

// One-dimensional Parzen estimator over observed values: a uniform prior
// component plus one (truncated) Gaussian kernel per observation, or
// re-weighted categorical counts. Kernel bandwidth per centre is
// max(domain span / 20, nearest-neighbour spacing).
class DimDensity {
  public:
    DimDensity(const DimKind& kind, const std::vector<double>& observations);

    double sample(std::mt19937_64& rng) const;
    double log_pdf(double value) const;

  private:
    DimKind kind_;
    std::vector<double> centers_;
    std::vector<double> bandwidths_;
    std::vector<double> cat_probs_;
};

struct TpeConfig {
    double gamma = 0.25;        // quantile of the target defining the good set
    int n_candidates = 24;      // draws from l(x) per suggestion
    std::size_t n_startup = 20; // uniform trials before density guidance
};

// Indices of the good (best ceil(gamma*n) stable targets) and bad sets.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_good_bad(
    const std::vector<double>& targets, const std::vector<bool>& stable, double gamma);

struct FlatObservation {
    std::vector<double> params;
    double target = 0.0;
    bool stable = true;
};

// Suggests the next point of a flat space where every dimension is always
// active: draws candidates from l(x) and keeps the one maximizing l(x)/g(x).
std::vector<double> suggest_flat(const std::vector<DimKind>& dims,
                                 const std::vector<FlatObservation>& history,
                                 const TpeConfig& cfg, std::mt19937_64& rng);

}  // namespace autocluster::tpe
