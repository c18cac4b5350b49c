#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"

namespace autocluster {

ClusteringResult fuzzy_c_means(const FeatureMatrix& m, int k, const FuzzyOptions& opt,
                               std::uint64_t seed) {
    const std::size_t n = m.rows(), d = m.cols();
    const auto uk = static_cast<std::size_t>(k);
    if (k < 1) throw std::invalid_argument("fuzzy_c_means: k must be >= 1");
    if (uk > n) throw std::invalid_argument("fuzzy_c_means: k > n");
    if (opt.fuzzifier <= 1.0) throw std::invalid_argument("fuzzy_c_means: fuzzifier must be > 1");

    std::mt19937_64 rng(seed);
    auto uniform01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    // Random membership initialization, rows normalized to 1.
    std::vector<double> u(n * uk);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < uk; ++c) {
            u[i * uk + c] = uniform01() + 1e-12;
            sum += u[i * uk + c];
        }
        for (std::size_t c = 0; c < uk; ++c) u[i * uk + c] /= sum;
    }

    const double exponent = 2.0 / (opt.fuzzifier - 1.0);
    std::vector<double> centers(uk * d), dist(n * uk);
    ClusteringResult result;
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        // Centers from fuzzified memberships.
        std::fill(centers.begin(), centers.end(), 0.0);
        for (std::size_t c = 0; c < uk; ++c) {
            double weight = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double um = std::pow(u[i * uk + c], opt.fuzzifier);
                weight += um;
                const auto row = m.row(i);
                for (std::size_t j = 0; j < d; ++j) centers[c * d + j] += um * row[j];
            }
            if (weight > 0.0)
                for (std::size_t j = 0; j < d; ++j) centers[c * d + j] /= weight;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < uk; ++c)
                dist[i * uk + c] = euclidean_distance(m.row(i), {centers.data() + c * d, d});

        // Membership update; points coincident with a center take membership 1
        // for the first such center (limit convention).
        double max_change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t zero_c = uk;
            for (std::size_t c = 0; c < uk; ++c) {
                if (dist[i * uk + c] == 0.0) {
                    zero_c = c;
                    break;
                }
            }
            for (std::size_t c = 0; c < uk; ++c) {
                double value;
                if (zero_c != uk) {
                    value = c == zero_c ? 1.0 : 0.0;
                } else {
                    double denom = 0.0;
                    for (std::size_t c2 = 0; c2 < uk; ++c2)
                        denom += std::pow(dist[i * uk + c] / dist[i * uk + c2], exponent);
                    value = 1.0 / denom;
                }
                max_change = std::max(max_change, std::abs(value - u[i * uk + c]));
                u[i * uk + c] = value;
            }
        }
        result.iterations = iter + 1;
        if (max_change < opt.tol) {
            result.converged = true;
            break;
        }
    }

    result.labels.resize(n);
    result.memberships.assign(n, std::vector<double>(uk));
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        for (std::size_t c = 0; c < uk; ++c) {
            result.memberships[i][c] = u[i * uk + c];
            if (u[i * uk + c] > best) {
                best = u[i * uk + c];
                result.labels[i] = static_cast<int>(c);
            }
        }
    }
    result.k_found = k;
    return result;
}

}  // namespace autocluster
