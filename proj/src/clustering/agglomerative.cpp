#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"
#include "internal.hpp"

namespace autocluster {

namespace {

// Ward merge cost: the increase in total within-cluster sum of squares,
// |A||B|/(|A|+|B|) * ||cA - cB||^2. For singletons this is ||a-b||^2 / 2.
double ward_cost(double na, std::span<const double> ca, double nb, std::span<const double> cb) {
    return na * nb / (na + nb) * squared_distance(ca, cb);
}

struct MergeRecord {
    int node_a;
    int node_b;
    double cost;
};

// Labels points by replaying merges in nondecreasing cost order until k
// clusters remain. Merge node ids follow the scipy convention: original
// points are 0..n-1, merge t creates node n+t.
std::vector<int> cut_merges(std::size_t n, std::vector<MergeRecord> merges, int k, int* k_found) {
    std::vector<std::size_t> order(merges.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return merges[a].cost < merges[b].cost;
    });

    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    std::vector<int> node_rep(n + merges.size());
    std::iota(node_rep.begin(), node_rep.begin() + static_cast<std::ptrdiff_t>(n), 0);

    // Apply all but k-1 of the n-1 recorded merges.
    const std::size_t keep = static_cast<std::size_t>(std::max(1, k)) - 1;
    const std::size_t apply_count = merges.size() > keep ? merges.size() - keep : 0;
    std::size_t applied = 0;
    for (std::size_t t = 0; t < merges.size(); ++t) {
        const auto& mr = merges[order[t]];
        const int rep_a = node_rep[static_cast<std::size_t>(mr.node_a)];
        const int rep_b = node_rep[static_cast<std::size_t>(mr.node_b)];
        if (applied < apply_count) {
            const int ra = find(rep_a);
            parent[static_cast<std::size_t>(find(rep_b))] = ra;
            ++applied;
        }
        node_rep[n + order[t]] = find(rep_a);
    }

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = find(static_cast<int>(i));
    *k_found = detail::compact_labels(labels, static_cast<int>(n));
    return labels;
}

// Nearest-neighbour chain over ward costs computed from (size, centroid).
std::vector<MergeRecord> nn_chain_ward(const double* data, std::size_t n, std::size_t d) {
    std::vector<double> centroid(data, data + n * d);
    std::vector<double> size(n, 1.0);
    std::vector<int> node(n);
    std::iota(node.begin(), node.end(), 0);
    std::vector<bool> alive(n, true);
    std::vector<MergeRecord> merges;
    merges.reserve(n - 1);
    std::vector<std::size_t> chain;
    std::size_t n_active = n;

    auto cost = [&](std::size_t a, std::size_t b) {
        return ward_cost(size[a], {centroid.data() + a * d, d}, size[b], {centroid.data() + b * d, d});
    };
    while (n_active > 1) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < n; ++i)
                if (alive[i]) {
                    chain.push_back(i);
                    break;
                }
        }
        const std::size_t top = chain.back();
        std::size_t nn = top;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i] || i == top) continue;
            const double c = cost(top, i);
            if (c < best) {
                best = c;
                nn = i;
            }
        }
        if (chain.size() >= 2 && nn == chain[chain.size() - 2]) {
            chain.pop_back();
            chain.pop_back();
            const std::size_t a = std::min(top, nn), b = std::max(top, nn);
            merges.push_back({node[a], node[b], best});
            const double total = size[a] + size[b];
            for (std::size_t j = 0; j < d; ++j)
                centroid[a * d + j] =
                    (size[a] * centroid[a * d + j] + size[b] * centroid[b * d + j]) / total;
            size[a] = total;
            alive[b] = false;
            node[a] = static_cast<int>(n) + static_cast<int>(merges.size()) - 1;
            --n_active;
        } else {
            chain.push_back(nn);
        }
    }
    return merges;
}

// Nearest-neighbour chain for average linkage over an explicit distance
// matrix with Lance-Williams updates.
std::vector<MergeRecord> nn_chain_average(const double* data, std::size_t n, std::size_t d) {
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = euclidean_distance({data + i * d, d}, {data + j * d, d});
            dist[i * n + j] = dist[j * n + i] = v;
        }
    std::vector<double> size(n, 1.0);
    std::vector<int> node(n);
    std::iota(node.begin(), node.end(), 0);
    std::vector<bool> alive(n, true);
    std::vector<MergeRecord> merges;
    merges.reserve(n - 1);
    std::vector<std::size_t> chain;
    std::size_t n_active = n;

    while (n_active > 1) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < n; ++i)
                if (alive[i]) {
                    chain.push_back(i);
                    break;
                }
        }
        const std::size_t top = chain.back();
        std::size_t nn = top;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i] || i == top) continue;
            const double c = dist[top * n + i];
            if (c < best) {
                best = c;
                nn = i;
            }
        }
        if (chain.size() >= 2 && nn == chain[chain.size() - 2]) {
            chain.pop_back();
            chain.pop_back();
            const std::size_t a = std::min(top, nn), b = std::max(top, nn);
            merges.push_back({node[a], node[b], best});
            const double total = size[a] + size[b];
            for (std::size_t x = 0; x < n; ++x) {
                if (!alive[x] || x == a || x == b) continue;
                const double v = (size[a] * dist[a * n + x] + size[b] * dist[b * n + x]) / total;
                dist[a * n + x] = dist[x * n + a] = v;
            }
            size[a] = total;
            alive[b] = false;
            node[a] = static_cast<int>(n) + static_cast<int>(merges.size()) - 1;
            --n_active;
        } else {
            chain.push_back(nn);
        }
    }
    return merges;
}

// Symmetrized k-nearest-neighbour adjacency (ties broken by index).
std::vector<std::map<std::size_t, double>> knn_graph(const double* data, std::size_t n,
                                                     std::size_t d, int neighbours) {
    const std::size_t kn = std::min<std::size_t>(static_cast<std::size_t>(neighbours), n - 1);
    std::vector<std::map<std::size_t, double>> adj(n);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back(euclidean_distance({data + i * d, d}, {data + j * d, d}), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kn), cand.end());
        for (std::size_t t = 0; t < kn; ++t) {
            adj[i].emplace(cand[t].second, cand[t].first);
            adj[cand[t].second].emplace(i, cand[t].first);
        }
    }
    return adj;
}

struct Cluster {
    double size = 0.0;
    std::vector<double> centroid;
    std::vector<std::size_t> members;
    std::map<std::size_t, double> edges;  // neighbour slot -> linkage cost
    std::uint64_t version = 0;
    bool alive = true;
};

double average_direct(const double* data, std::size_t d, const std::vector<std::size_t>& a,
                      const std::vector<std::size_t>& b) {
    double sum = 0.0;
    for (std::size_t i : a)
        for (std::size_t j : b)
            sum += euclidean_distance({data + i * d, d}, {data + j * d, d});
    return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double linkage_cost(Linkage linkage, const double* data, std::size_t d, const Cluster& a,
                    const Cluster& b) {
    if (linkage == Linkage::ward)
        return ward_cost(a.size, {a.centroid.data(), d}, b.size, {b.centroid.data(), d});
    return average_direct(data, d, a.members, b.members);
}

std::vector<int> constrained_agglomerative(const double* data, std::size_t n, std::size_t d, int k,
                                           Linkage linkage, int neighbours, int* k_found) {
    auto adjacency = knn_graph(data, n, d, neighbours);
    std::vector<Cluster> clusters(n);
    for (std::size_t i = 0; i < n; ++i) {
        clusters[i].size = 1.0;
        clusters[i].centroid.assign(data + i * d, data + (i + 1) * d);
        clusters[i].members = {i};
    }
    using Edge = std::tuple<double, std::size_t, std::size_t, std::uint64_t, std::uint64_t>;
    std::priority_queue<Edge, std::vector<Edge>, std::greater<>> heap;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, dij] : adjacency[i]) {
            if (j < i) continue;
            const double c = linkage == Linkage::ward ? dij * dij / 2.0 : dij;
            clusters[i].edges[j] = c;
            clusters[j].edges[i] = c;
            heap.emplace(c, i, j, 0, 0);
        }
    }

    std::size_t n_active = n;
    auto merge = [&](std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        Cluster& A = clusters[a];
        Cluster& B = clusters[b];
        const double total = A.size + B.size;
        for (std::size_t j = 0; j < d; ++j)
            A.centroid[j] = (A.size * A.centroid[j] + B.size * B.centroid[j]) / total;
        A.size = total;
        A.members.insert(A.members.end(), B.members.begin(), B.members.end());
        std::map<std::size_t, double> neighbours_union;
        for (const auto& [x, c] : A.edges)
            if (x != b) neighbours_union.emplace(x, 0.0);
        for (const auto& [x, c] : B.edges)
            if (x != a) neighbours_union.emplace(x, 0.0);
        A.edges.clear();
        ++A.version;
        B.alive = false;
        B.edges.clear();
        B.members.clear();
        for (auto& [x, c] : neighbours_union) {
            clusters[x].edges.erase(a);
            clusters[x].edges.erase(b);
            c = linkage_cost(linkage, data, d, A, clusters[x]);
            A.edges[x] = c;
            clusters[x].edges[a] = c;
            heap.emplace(c, std::min(a, x), std::max(a, x),
                         clusters[std::min(a, x)].version, clusters[std::max(a, x)].version);
        }
        --n_active;
    };

    while (n_active > static_cast<std::size_t>(k) && !heap.empty()) {
        const auto [c, a, b, va, vb] = heap.top();
        heap.pop();
        if (!clusters[a].alive || !clusters[b].alive) continue;
        if (clusters[a].version != va || clusters[b].version != vb) continue;
        if (!clusters[a].edges.count(b)) continue;
        merge(a, b);
    }
    // Disconnected components are merged last, closest pair first.
    while (n_active > static_cast<std::size_t>(k)) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!clusters[i].alive) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!clusters[j].alive) continue;
                const double c = linkage_cost(linkage, data, d, clusters[i], clusters[j]);
                if (c < best) {
                    best = c;
                    ba = i;
                    bb = j;
                }
            }
        }
        merge(ba, bb);
    }

    std::vector<int> labels(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (!clusters[i].alive) continue;
        for (std::size_t p : clusters[i].members) labels[p] = static_cast<int>(i);
    }
    *k_found = detail::compact_labels(labels, static_cast<int>(n));
    return labels;
}

}  // namespace

namespace detail {

ClusteringResult agglomerate_points(const double* data, std::size_t n, std::size_t d, int k,
                                    Linkage linkage, std::optional<int> connectivity_neighbours) {
    ClusteringResult result;
    if (n == 0) throw std::invalid_argument("agglomerative: empty matrix");
    if (k < 1) throw std::invalid_argument("agglomerative: k must be >= 1");
    if (static_cast<std::size_t>(k) >= n) {
        result.labels.resize(n);
        std::iota(result.labels.begin(), result.labels.end(), 0);
        result.k_found = static_cast<int>(n);
        return result;
    }
    if (connectivity_neighbours) {
        if (*connectivity_neighbours < 1)
            throw std::invalid_argument("agglomerative: connectivity_neighbours must be >= 1");
        result.labels = constrained_agglomerative(data, n, d, k, linkage, *connectivity_neighbours,
                                                  &result.k_found);
        return result;
    }
    auto merges = linkage == Linkage::ward ? nn_chain_ward(data, n, d) : nn_chain_average(data, n, d);
    result.labels = cut_merges(n, std::move(merges), k, &result.k_found);
    return result;
}

}  // namespace detail

ClusteringResult agglomerative(const FeatureMatrix& m, int k, Linkage linkage,
                               std::optional<int> connectivity_neighbours) {
    return detail::agglomerate_points(m.values.data(), m.rows(), m.cols(), k, linkage,
                                      connectivity_neighbours);
}

}  // namespace autocluster
