#include "autocluster/emri.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "autocluster/evaluation.hpp"
#include "autocluster/util.hpp"

namespace autocluster {

namespace {

double fit_bsi(const ModelSpec& spec, const FeatureMatrix& m) {
    const auto result = fit(spec, m);
    const auto sil = silhouette(m, result.labels);
    return bsi(sil.cluster_scores);
}

}  // namespace

ImportanceTable elimination_importance(const std::vector<ModelSpec>& models,
                                       const FeatureMatrix& m) {
    if (models.empty()) throw std::invalid_argument("elimination_importance: no models");
    if (m.cols() < 2) throw std::invalid_argument("elimination_importance: need >= 2 features");
    if (m.state == MatrixState::raw)
        throw std::invalid_argument("elimination_importance: rectify the matrix first");

    const std::size_t nf = m.cols(), nm = models.size();
    const FeatureMatrix base = m.state == MatrixState::standardized ? m : standardize(m);

    ImportanceTable table;
    table.feature_names = m.feature_names;
    table.model_names.reserve(nm);
    for (const auto& spec : models) table.model_names.push_back(algorithm_name(spec.algorithm));
    table.difference_ratio.assign(nf, std::vector<std::optional<double>>(nm));
    table.centered.assign(nf, std::vector<std::optional<double>>(nm));
    table.baseline_bsi.assign(nm, 0.0);

    for (std::size_t mi = 0; mi < nm; ++mi)
        table.baseline_bsi[mi] = fit_bsi(models[mi], base);

    // Each (feature, model) cell is an independent re-fit on the reduced,
    // re-standardized matrix with the same spec and seed.
    parallel_for(nf * nm, [&](std::size_t cell) {
        const std::size_t f = cell / nm, mi = cell % nm;
        const double baseline = table.baseline_bsi[mi];
        if (baseline == 0.0) return;  // ratio undefined
        try {
            FeatureMatrix reduced = base.without_column(f);
            reduced.state = MatrixState::rectified;
            reduced = standardize(reduced);
            const double score = fit_bsi(models[mi], reduced);
            table.difference_ratio[f][mi] = score / baseline - 1.0;
        } catch (const std::exception&) {
            // cell stays missing
        }
    });

    table.model_mean_ratio.assign(nm, 0.0);
    for (std::size_t mi = 0; mi < nm; ++mi) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t f = 0; f < nf; ++f) {
            if (table.difference_ratio[f][mi]) {
                sum += *table.difference_ratio[f][mi];
                ++count;
            }
        }
        if (count == 0) {
            table.warnings.push_back("model " + table.model_names[mi] +
                                     " produced no usable elimination cells");
            continue;
        }
        if (count < nf)
            table.warnings.push_back("model " + table.model_names[mi] + " missing " +
                                     std::to_string(nf - count) + " elimination cells");
        table.model_mean_ratio[mi] = sum / static_cast<double>(count);
        for (std::size_t f = 0; f < nf; ++f)
            if (table.difference_ratio[f][mi])
                table.centered[f][mi] = *table.difference_ratio[f][mi] - table.model_mean_ratio[mi];
    }

    table.aggregate.assign(nf, 0.0);
    table.aggregate_min.assign(nf, 0.0);
    table.aggregate_max.assign(nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
        double sum = 0.0, lo = 0.0, hi = 0.0;
        std::size_t count = 0;
        for (std::size_t mi = 0; mi < nm; ++mi) {
            if (!table.centered[f][mi]) continue;
            const double v = *table.centered[f][mi];
            sum += v;
            lo = count == 0 ? v : std::min(lo, v);
            hi = count == 0 ? v : std::max(hi, v);
            ++count;
        }
        if (count == 0) {
            table.warnings.push_back("feature " + table.feature_names[f] +
                                     " has no usable elimination cells");
            continue;
        }
        table.aggregate[f] = sum / static_cast<double>(count);
        table.aggregate_min[f] = lo;
        table.aggregate_max[f] = hi;
    }
    return table;
}

FeatureSelection select_features(const ImportanceTable& table) {
    FeatureSelection out;
    std::vector<std::size_t> kept_idx;
    for (std::size_t f = 0; f < table.feature_names.size(); ++f) {
        if (table.aggregate[f] <= 0.0)
            kept_idx.push_back(f);
        else
            out.dropped.push_back(table.feature_names[f]);
    }
    if (kept_idx.empty())
        throw std::runtime_error(
            "select_features: every feature has positive importance; clustering is degenerate, "
            "review the inputs");
    std::stable_sort(kept_idx.begin(), kept_idx.end(), [&](std::size_t a, std::size_t b) {
        return table.aggregate[a] < table.aggregate[b];
    });
    for (std::size_t f : kept_idx) out.kept.push_back(table.feature_names[f]);
    return out;
}

}  // namespace autocluster
