#include "autocluster/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "autocluster/util.hpp"

namespace autocluster::tpe {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double gauss(std::mt19937_64& rng) {
    // Box-Muller on explicit uniforms keeps the stream portable.
    const double u1 = std::max(uniform01(rng), 1e-300);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double quantized_max(const Quantized& q) {
    const double steps = std::floor((q.hi - q.lo) / q.step + 1e-9);
    return q.lo + steps * q.step;
}

constexpr double kLogProbFloor = -745.0;  // log of the smallest positive double

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace

double sample_uniform(const DimKind& kind, std::mt19937_64& rng) {
    if (const auto* c = std::get_if<Continuous>(&kind))
        return c->lo + uniform01(rng) * (c->hi - c->lo);
    if (const auto* q = std::get_if<Quantized>(&kind)) {
        const auto steps = static_cast<std::uint64_t>(std::floor((q->hi - q->lo) / q->step + 1e-9));
        return q->lo + static_cast<double>(rng() % (steps + 1)) * q->step;
    }
    const auto& cat = std::get<Categorical>(kind);
    return static_cast<double>(rng() % cat.n);
}

double snap(const DimKind& kind, double value) {
    if (const auto* c = std::get_if<Continuous>(&kind)) return std::clamp(value, c->lo, c->hi);
    if (const auto* q = std::get_if<Quantized>(&kind)) {
        const double snapped = q->lo + q->step * std::round((value - q->lo) / q->step);
        return std::clamp(snapped, q->lo, quantized_max(*q));
    }
    const auto& cat = std::get<Categorical>(kind);
    return std::clamp(std::round(value), 0.0, static_cast<double>(cat.n - 1));
}

bool in_domain(const DimKind& kind, double value) {
    if (const auto* c = std::get_if<Continuous>(&kind)) return value >= c->lo && value <= c->hi;
    if (const auto* q = std::get_if<Quantized>(&kind)) {
        if (value < q->lo - 1e-9 || value > quantized_max(*q) + 1e-9) return false;
        const double steps = (value - q->lo) / q->step;
        return std::abs(steps - std::round(steps)) < 1e-6;
    }
    const auto& cat = std::get<Categorical>(kind);
    return value >= 0.0 && value < static_cast<double>(cat.n) &&
           value == std::floor(value);
}

DimDensity::DimDensity(const DimKind& kind, const std::vector<double>& observations)
    : kind_(kind) {
    if (const auto* cat = std::get_if<Categorical>(&kind_)) {
        // Laplace-smoothed counts.
        std::vector<double> counts(cat->n, 1.0);
        for (double v : observations) counts[static_cast<std::size_t>(v)] += 1.0;
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        cat_probs_.resize(cat->n);
        for (std::size_t i = 0; i < cat->n; ++i) cat_probs_[i] = counts[i] / total;
        return;
    }
    centers_ = observations;
    const double lo = std::holds_alternative<Continuous>(kind_) ? std::get<Continuous>(kind_).lo
                                                                : std::get<Quantized>(kind_).lo;
    const double hi = std::holds_alternative<Continuous>(kind_) ? std::get<Continuous>(kind_).hi
                                                                : quantized_max(std::get<Quantized>(kind_));
    const double span = hi - lo;
    bandwidths_.resize(centers_.size());
    std::vector<double> sorted = centers_;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        double spacing = span;
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), centers_[i]);
        const auto idx = static_cast<std::size_t>(it - sorted.begin());
        if (idx + 1 < sorted.size()) spacing = std::min(spacing, sorted[idx + 1] - centers_[i]);
        if (idx > 0) spacing = std::min(spacing, centers_[i] - sorted[idx - 1]);
        bandwidths_[i] = std::max(span / 20.0, spacing);
    }
}

double DimDensity::sample(std::mt19937_64& rng) const {
    if (!cat_probs_.empty()) {
        double u = uniform01(rng);
        for (std::size_t i = 0; i < cat_probs_.size(); ++i) {
            u -= cat_probs_[i];
            if (u <= 0.0) return static_cast<double>(i);
        }
        return static_cast<double>(cat_probs_.size() - 1);
    }
    // Mixture of the uniform prior and one kernel per centre, equal weights.
    const std::size_t component = rng() % (centers_.size() + 1);
    if (component == centers_.size()) return snap(kind_, sample_uniform(kind_, rng));
    const double mu = centers_[component];
    const double sigma = bandwidths_[component];
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double v = mu + sigma * gauss(rng);
        if (in_domain(kind_, snap(kind_, v))) {
            const double snapped = snap(kind_, v);
            // Accept only values inside the raw domain; snap handles grids.
            if (std::holds_alternative<Continuous>(kind_)) {
                const auto& c = std::get<Continuous>(kind_);
                if (v >= c.lo && v <= c.hi) return v;
            } else {
                return snapped;
            }
        }
    }
    return snap(kind_, mu);
}

double DimDensity::log_pdf(double value) const {
    if (!cat_probs_.empty()) {
        const auto idx = static_cast<std::size_t>(value);
        if (idx >= cat_probs_.size()) return kLogProbFloor;
        return std::log(cat_probs_[idx]);
    }
    const double lo = std::holds_alternative<Continuous>(kind_) ? std::get<Continuous>(kind_).lo
                                                                : std::get<Quantized>(kind_).lo;
    const double hi = std::holds_alternative<Continuous>(kind_) ? std::get<Continuous>(kind_).hi
                                                                : quantized_max(std::get<Quantized>(kind_));
    const double span = std::max(hi - lo, 1e-12);
    double density = 1.0 / span;  // prior component
    for (std::size_t i = 0; i < centers_.size(); ++i)
        density += normal_pdf(value, centers_[i], bandwidths_[i]);
    density /= static_cast<double>(centers_.size() + 1);
    return density > 0.0 ? std::log(density) : kLogProbFloor;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_good_bad(
    const std::vector<double>& targets, const std::vector<bool>& stable, double gamma) {
    if (targets.size() != stable.size())
        throw std::invalid_argument("split_good_bad: size mismatch");
    std::vector<std::size_t> order(targets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
    const auto n_good = static_cast<std::size_t>(
        std::ceil(gamma * static_cast<double>(targets.size())));
    std::vector<std::size_t> good, bad;
    for (std::size_t idx : order) {
        if (good.size() < n_good && stable[idx])
            good.push_back(idx);
        else
            bad.push_back(idx);
    }
    return {std::move(good), std::move(bad)};
}

std::vector<double> suggest_flat(const std::vector<DimKind>& dims,
                                 const std::vector<FlatObservation>& history,
                                 const TpeConfig& cfg, std::mt19937_64& rng) {
    if (history.size() < cfg.n_startup) {
        std::vector<double> out(dims.size());
        for (std::size_t j = 0; j < dims.size(); ++j) out[j] = sample_uniform(dims[j], rng);
        return out;
    }
    std::vector<double> targets(history.size());
    std::vector<bool> stable(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        targets[i] = history[i].target;
        stable[i] = history[i].stable;
    }
    const auto [good, bad] = split_good_bad(targets, stable, cfg.gamma);

    std::vector<DimDensity> l, g;
    l.reserve(dims.size());
    g.reserve(dims.size());
    for (std::size_t j = 0; j < dims.size(); ++j) {
        std::vector<double> good_obs, bad_obs;
        for (std::size_t idx : good) good_obs.push_back(history[idx].params[j]);
        for (std::size_t idx : bad) bad_obs.push_back(history[idx].params[j]);
        l.emplace_back(dims[j], good_obs);
        g.emplace_back(dims[j], bad_obs);
    }

    std::vector<double> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cfg.n_candidates; ++c) {
        std::vector<double> candidate(dims.size());
        double score = 0.0;
        for (std::size_t j = 0; j < dims.size(); ++j) {
            candidate[j] = l[j].sample(rng);
            score += l[j].log_pdf(candidate[j]) - g[j].log_pdf(candidate[j]);
        }
        if (score > best_score) {
            best_score = score;
            best = std::move(candidate);
        }
    }
    return best;
}

}  // namespace autocluster::tpe
