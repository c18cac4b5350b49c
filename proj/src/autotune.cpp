#include "autocluster/autotune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "autocluster/util.hpp"

namespace autocluster {

SearchSpace SearchSpace::defaults() {
    using tpe::Categorical;
    using tpe::Continuous;
    using tpe::Quantized;
    SearchSpace space;
    space.algorithms = {
        {Algorithm::fuzzy_c_means, {{"m", Continuous{1.1, 4.0}, {}}}},
        {Algorithm::kmeans_pp,
         {{"n_init", Quantized{1, 100, 5}, {}},
          {"core", Categorical{2}, {"em-style", "elkan"}}}},
        {Algorithm::mean_shift, {{"quantile", Continuous{0.1, 1.0}, {}}}},
        {Algorithm::ward, {{"connectivity_neighbours", Quantized{5, 100, 5}, {}}}},
        {Algorithm::birch,
         {{"threshold", Continuous{0.1, 1.0}, {}}, {"branching", Quantized{10, 100, 10}, {}}}},
        {Algorithm::minibatch_kmeans, {{"n_init", Quantized{1, 100, 5}, {}}}},
        {Algorithm::average_linkage, {}},
        {Algorithm::dbscan,
         {{"eps", Continuous{0.1, 3.0}, {}}, {"min_pts", Quantized{2, 20, 1}, {}}}},
    };
    return space;
}

SearchSpace SearchSpace::restricted_to(const std::vector<Algorithm>& shortlist) const {
    SearchSpace out;
    out.k_min = k_min;
    out.k_max = k_max;
    for (Algorithm a : shortlist) out.algorithms.push_back(domain_of(a));
    return out;
}

const AlgorithmSpace& SearchSpace::domain_of(Algorithm a) const {
    for (const auto& alg : algorithms)
        if (alg.algorithm == a) return alg;
    throw std::invalid_argument("algorithm not in search space: " + algorithm_name(a));
}

bool SearchSpace::contains(const ModelSpec& spec) const {
    const AlgorithmSpace* found = nullptr;
    for (const auto& alg : algorithms)
        if (alg.algorithm == spec.algorithm) found = &alg;
    if (!found) return false;
    if (is_k_demanding(spec.algorithm)) {
        if (!spec.k || *spec.k < k_min || *spec.k > k_max) return false;
    }
    for (const auto& dom : found->params) {
        const auto it = spec.hyperparameters.find(dom.name);
        if (it == spec.hyperparameters.end()) return false;
        double value;
        if (const double* num = std::get_if<double>(&it->second)) {
            value = *num;
        } else {
            const auto& label = std::get<std::string>(it->second);
            const auto pos = std::find(dom.choices.begin(), dom.choices.end(), label);
            if (pos == dom.choices.end()) return false;
            value = static_cast<double>(pos - dom.choices.begin());
        }
        if (!tpe::in_domain(dom.kind, value)) return false;
    }
    return true;
}

HyperMap default_hyperparameters(Algorithm a) {
    switch (a) {
        case Algorithm::kmeans_pp:
            return {{"n_init", 10.0}, {"core", std::string("em-style")}};
        case Algorithm::minibatch_kmeans:
            return {{"n_init", 1.0}};
        case Algorithm::fuzzy_c_means:
            return {{"m", 2.0}};
        case Algorithm::mean_shift:
            return {{"quantile", 0.3}};
        case Algorithm::ward:
            return {{"connectivity_neighbours", 20.0}};
        case Algorithm::average_linkage:
            return {};
        case Algorithm::birch:
            return {{"threshold", 0.5}, {"branching", 50.0}};
        case Algorithm::dbscan:
            return {{"eps", 1.5}, {"min_pts", 5.0}};
    }
    throw std::logic_error("unreachable algorithm defaults");
}

double loss(double bsi_value, double sigma_value, double cv, const LossWeights& w) {
    return (w.s_star - bsi_value) + w.lambda * sigma_value + w.phi * cv;
}

void TuneHistory::append(TrialRecord trial) {
    if (!trial.failed) {
        auto& [sum, count] = loss_sums_[trial.k];
        sum += trial.loss_x;
        ++count;
        trial.loss_conditional = sum == 0.0 ? 1.0 : trial.loss_x / (sum / static_cast<double>(count));
    } else {
        trial.loss_conditional = std::numeric_limits<double>::infinity();
    }
    trials_.push_back(std::move(trial));
}

std::optional<double> TuneHistory::loss_k(int k) const {
    const auto it = loss_sums_.find(k);
    if (it == loss_sums_.end() || it->second.second == 0) return std::nullopt;
    return it->second.first / static_cast<double>(it->second.second);
}

std::optional<double> TuneHistory::loss_k_batch(int k) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : trials_) {
        if (t.failed || t.k != k) continue;
        sum += t.loss_x;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::vector<BestPerK> TuneHistory::best_per_k() const {
    std::map<int, const TrialRecord*> best;
    for (const auto& t : trials_) {
        if (t.failed) continue;
        auto [it, inserted] = best.try_emplace(t.k, &t);
        if (!inserted && t.loss_x < it->second->loss_x) it->second = &t;
    }
    std::vector<BestPerK> out;
    out.reserve(best.size());
    for (const auto& [k, trial] : best) out.push_back({k, *trial, trial->cv});
    return out;
}

double conditional_loss(const TuneHistory& history, const TrialRecord& trial) {
    const auto prior = history.loss_k(trial.k);
    double sum = trial.loss_x;
    std::size_t count = 1;
    if (prior) {
        // Recover the running sum from the mean; the history tracks counts
        // only through the mean, so recompute from trials for exactness.
        sum = 0.0;
        count = 0;
        for (const auto& t : history.trials()) {
            if (t.failed || t.k != trial.k) continue;
            sum += t.loss_x;
            ++count;
        }
        sum += trial.loss_x;
        ++count;
    }
    const double mean = sum / static_cast<double>(count);
    return mean == 0.0 ? 1.0 : trial.loss_x / mean;
}

namespace {

struct DimObservations {
    std::vector<double> good;
    std::vector<double> bad;
};

double spec_param_value(const ModelSpec& spec, const ParamDomain& dom) {
    const auto it = spec.hyperparameters.find(dom.name);
    if (it == spec.hyperparameters.end())
        throw std::invalid_argument("spec missing hyperparameter " + dom.name);
    if (const double* num = std::get_if<double>(&it->second)) return *num;
    const auto& label = std::get<std::string>(it->second);
    const auto pos = std::find(dom.choices.begin(), dom.choices.end(), label);
    if (pos == dom.choices.end())
        throw std::invalid_argument("unknown choice for " + dom.name + ": " + label);
    return static_cast<double>(pos - dom.choices.begin());
}

HyperValue param_to_value(const ParamDomain& dom, double v) {
    if (!dom.choices.empty()) return dom.choices[static_cast<std::size_t>(v)];
    return v;
}

ModelSpec uniform_spec(const SearchSpace& space, std::mt19937_64& rng) {
    ModelSpec spec;
    const auto& alg = space.algorithms[rng() % space.algorithms.size()];
    spec.algorithm = alg.algorithm;
    if (is_k_demanding(spec.algorithm))
        spec.k = space.k_min + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                    space.k_max - space.k_min + 1));
    for (const auto& dom : alg.params)
        spec.hyperparameters[dom.name] =
            param_to_value(dom, tpe::snap(dom.kind, tpe::sample_uniform(dom.kind, rng)));
    return spec;
}

}  // namespace

ModelSpec tpe_suggest(const TuneHistory& history, const SearchSpace& space,
                      const tpe::TpeConfig& cfg, std::mt19937_64& rng) {
    const auto& trials = history.trials();
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < trials.size(); ++i)
        if (!trials[i].failed) usable.push_back(i);
    if (usable.size() < cfg.n_startup) return uniform_spec(space, rng);

    std::vector<double> targets;
    std::vector<bool> stable;
    targets.reserve(usable.size());
    for (std::size_t i : usable) {
        targets.push_back(trials[i].loss_conditional);
        stable.push_back(trials[i].stable);
    }
    const auto [good, bad] = tpe::split_good_bad(targets, stable, cfg.gamma);

    // Hierarchical densities: algorithm first, then k (shared, categorical),
    // then only the chosen algorithm's own dimensions.
    const std::size_t n_alg = space.algorithms.size();
    auto algorithm_index = [&](Algorithm a) {
        for (std::size_t i = 0; i < n_alg; ++i)
            if (space.algorithms[i].algorithm == a) return i;
        return n_alg;
    };

    std::vector<double> alg_good, alg_bad, k_good, k_bad;
    std::map<std::pair<std::size_t, std::string>, DimObservations> param_obs;
    auto collect = [&](const std::vector<std::size_t>& subset, bool is_good) {
        for (std::size_t pos : subset) {
            const TrialRecord& t = trials[usable[pos]];
            const std::size_t ai = algorithm_index(t.spec.algorithm);
            if (ai == n_alg) continue;  // outside the current space
            (is_good ? alg_good : alg_bad).push_back(static_cast<double>(ai));
            if (is_k_demanding(t.spec.algorithm) && t.spec.k)
                (is_good ? k_good : k_bad).push_back(static_cast<double>(*t.spec.k - space.k_min));
            for (const auto& dom : space.algorithms[ai].params) {
                auto& obs = param_obs[{ai, dom.name}];
                (is_good ? obs.good : obs.bad).push_back(spec_param_value(t.spec, dom));
            }
        }
    };
    collect(good, true);
    collect(bad, false);

    const tpe::Categorical alg_kind{n_alg};
    const tpe::Categorical k_kind{static_cast<std::size_t>(space.k_max - space.k_min + 1)};
    const tpe::DimDensity l_alg(alg_kind, alg_good), g_alg(alg_kind, alg_bad);
    const tpe::DimDensity l_k(k_kind, k_good), g_k(k_kind, k_bad);

    std::map<std::pair<std::size_t, std::string>, std::pair<tpe::DimDensity, tpe::DimDensity>>
        param_density;
    for (std::size_t ai = 0; ai < n_alg; ++ai) {
        for (const auto& dom : space.algorithms[ai].params) {
            const auto& obs = param_obs[{ai, dom.name}];
            param_density.emplace(std::make_pair(ai, dom.name),
                                  std::make_pair(tpe::DimDensity(dom.kind, obs.good),
                                                 tpe::DimDensity(dom.kind, obs.bad)));
        }
    }

    ModelSpec best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cfg.n_candidates; ++c) {
        ModelSpec candidate;
        const auto ai = static_cast<std::size_t>(l_alg.sample(rng));
        const auto& alg = space.algorithms[ai];
        candidate.algorithm = alg.algorithm;
        double score = l_alg.log_pdf(static_cast<double>(ai)) -
                       g_alg.log_pdf(static_cast<double>(ai));
        if (is_k_demanding(candidate.algorithm)) {
            const double kv = l_k.sample(rng);
            candidate.k = space.k_min + static_cast<int>(kv);
            score += l_k.log_pdf(kv) - g_k.log_pdf(kv);
        }
        for (const auto& dom : alg.params) {
            const auto& [l_d, g_d] = param_density.at({ai, dom.name});
            const double v = tpe::snap(dom.kind, l_d.sample(rng));
            candidate.hyperparameters[dom.name] = param_to_value(dom, v);
            score += l_d.log_pdf(v) - g_d.log_pdf(v);
        }
        if (score > best_score) {
            best_score = score;
            best = std::move(candidate);
        }
    }
    return best;
}

ModelSpec tpe_suggest(const TuneHistory& history, const SearchSpace& space, double gamma,
                      int n_candidates, std::uint64_t seed) {
    tpe::TpeConfig cfg;
    cfg.gamma = gamma;
    cfg.n_candidates = n_candidates;
    std::mt19937_64 rng(seed);
    return tpe_suggest(history, space, cfg, rng);
}

TuneHistory optimize(const SearchSpace& space, const FeatureMatrix& m, const TuneOptions& opt) {
    if (space.algorithms.empty()) throw std::invalid_argument("optimize: empty search space");
    if (opt.iterations < 1) throw std::invalid_argument("optimize: no trials requested");
    if (m.state != MatrixState::standardized)
        throw std::invalid_argument("optimize: feature matrix must be standardized");

    tpe::TpeConfig tpe_cfg;
    tpe_cfg.gamma = opt.gamma;
    tpe_cfg.n_candidates = opt.n_candidates;
    tpe_cfg.n_startup = opt.n_startup;
    std::mt19937_64 rng(mix_seed(opt.seed, 0x7065));

    TuneHistory history(opt.weights);
    for (int iter = 0; iter < opt.iterations; ++iter) {
        TrialRecord trial;
        trial.iteration = iter;
        trial.spec = tpe_suggest(history, space, tpe_cfg, rng);
        trial.spec.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(iter) + 1);
        try {
            const auto result = fit(trial.spec, m);
            const auto quality = quality_report(m, result.labels, opt.cluster_weights);
            trial.quality = {quality.bsi, quality.sigma_sk, quality.si,
                             quality.ch,  quality.db,       quality.boundary_count};
            trial.k = is_k_demanding(trial.spec.algorithm) && trial.spec.k ? *trial.spec.k
                                                                           : result.k_found;
            if (is_stochastic(trial.spec.algorithm)) {
                StabilityConfig scfg;
                scfg.replicates = opt.stability_replicates;
                scfg.beta = opt.beta;
                scfg.norm = opt.norm;
                trial.cv = stability_cv({trial.spec}, m, scfg).settings.front().cv_max();
            } else {
                trial.cv = 0.0;
            }
            trial.stable = trial.cv < opt.tau;
            trial.loss_x = loss(trial.quality.bsi, trial.quality.sigma_sk, trial.cv, opt.weights);
        } catch (const std::exception&) {
            trial.failed = true;
            trial.stable = false;
            trial.loss_x = std::numeric_limits<double>::infinity();
            trial.k = trial.spec.k.value_or(0);
        }
        history.append(std::move(trial));
    }
    return history;
}

std::vector<BestPerK> finalize_best_per_k(const TuneHistory& history, const FeatureMatrix& m,
                                          const TuneOptions& opt) {
    auto table = history.best_per_k();
    for (auto& entry : table) {
        if (!is_stochastic(entry.trial.spec.algorithm)) {
            entry.cv_recheck = 0.0;
            continue;
        }
        StabilityConfig scfg;
        scfg.replicates = opt.final_replicates;
        scfg.beta = opt.beta;
        scfg.norm = opt.norm;
        entry.cv_recheck = stability_cv({entry.trial.spec}, m, scfg).settings.front().cv_max();
    }
    return table;
}

PrescreenResult prescreen(const std::vector<Algorithm>& algorithms, const FeatureMatrix& m,
                          const PrescreenOptions& opt) {
    if (algorithms.empty()) throw std::invalid_argument("prescreen: no algorithms");
    PrescreenResult result;
    result.rows.reserve(algorithms.size());

    struct AlgStats {
        double mean_bsi = 0.0;
        double mean_sigma = 0.0;
    };
    std::vector<AlgStats> stats(algorithms.size());

    StabilityConfig scfg;
    scfg.replicates = opt.replicates;
    scfg.beta = opt.beta;
    scfg.norm = opt.norm;

    for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
        const Algorithm a = algorithms[ai];
        std::vector<ModelSpec> settings;
        if (is_k_demanding(a)) {
            for (int k = opt.k_min; k <= opt.k_max; ++k) {
                ModelSpec spec;
                spec.algorithm = a;
                spec.k = k;
                spec.hyperparameters = default_hyperparameters(a);
                spec.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(k));
                settings.push_back(std::move(spec));
            }
        } else {
            ModelSpec spec;
            spec.algorithm = a;
            spec.hyperparameters = default_hyperparameters(a);
            spec.seed = mix_seed(opt.seed, 0);
            settings.push_back(std::move(spec));
        }
        const auto report = stability_cv(settings, m, scfg);

        PrescreenRow row;
        row.algorithm = a;
        row.cv_bsi = report.mean_cv_bsi;
        row.cv_sigma = report.mean_cv_sigma;
        double sum_bsi = 0.0, sum_sigma = 0.0;
        std::size_t count = 0;
        for (const auto& setting : report.settings) {
            for (double b : setting.replicate_bsi) sum_bsi += b;
            for (double s : setting.replicate_sigma) sum_sigma += s;
            count += setting.replicate_bsi.size();
        }
        if (count == 0) {
            row.discarded_unstable = true;
            row.mean_bsi = -1.0;
            row.mean_sigma = std::numeric_limits<double>::infinity();
            result.warnings.push_back("algorithm " + algorithm_name(a) +
                                      " failed every replicate and was discarded");
        } else {
            row.mean_bsi = sum_bsi / static_cast<double>(count);
            row.mean_sigma = sum_sigma / static_cast<double>(count);
            row.discarded_unstable = report.cv_max() > opt.tau;
        }
        result.rows.push_back(row);
    }

    if (algorithms.size() == 1) {
        result.rows[0].kept = true;
        result.shortlist.push_back(algorithms[0]);
        return result;
    }

    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < result.rows.size(); ++i)
        if (!result.rows[i].discarded_unstable) survivors.push_back(i);
    if (survivors.size() < 2) {
        result.warnings.push_back("fewer than 2 algorithms passed the stability gate; keeping the best 2");
        std::vector<std::size_t> all(result.rows.size());
        std::iota(all.begin(), all.end(), 0);
        std::stable_sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) {
            return result.rows[a].mean_bsi > result.rows[b].mean_bsi;
        });
        survivors.assign(all.begin(), all.begin() + std::min<std::size_t>(2, all.size()));
        std::sort(survivors.begin(), survivors.end());
    }

    // Combined rank: mean of the bSI rank (higher better) and sigma rank
    // (lower better), both ascending-loss oriented.
    std::vector<double> rank_bsi(result.rows.size(), 0.0), rank_sigma(result.rows.size(), 0.0);
    {
        std::vector<std::size_t> order = survivors;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return result.rows[a].mean_bsi > result.rows[b].mean_bsi;
        });
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            rank_bsi[order[pos]] = static_cast<double>(pos);
        order = survivors;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return result.rows[a].mean_sigma < result.rows[b].mean_sigma;
        });
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            rank_sigma[order[pos]] = static_cast<double>(pos);
    }
    std::vector<double> combined;
    for (std::size_t i : survivors) {
        result.rows[i].combined_rank = 0.5 * (rank_bsi[i] + rank_sigma[i]);
        combined.push_back(result.rows[i].combined_rank);
    }
    std::sort(combined.begin(), combined.end());
    const double median = quantile_sorted(combined, 0.5);

    std::vector<std::size_t> kept;
    for (std::size_t i : survivors)
        if (result.rows[i].combined_rank <= median) kept.push_back(i);
    if (kept.size() < 2) kept = survivors;  // degenerate tie structure
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return result.rows[a].combined_rank < result.rows[b].combined_rank;
    });
    for (std::size_t i : kept) {
        result.rows[i].kept = true;
        result.shortlist.push_back(result.rows[i].algorithm);
    }
    return result;
}

}  // namespace autocluster
