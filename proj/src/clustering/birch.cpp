#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "autocluster/clustering.hpp"
#include "autocluster/util.hpp"
#include "internal.hpp"

namespace autocluster {

namespace {

// Clustering feature: count, linear sum, and squared-norm sum of the points
// absorbed into a sub-cluster.
struct CF {
    double n = 0.0;
    std::vector<double> ls;
    double ss = 0.0;

    static CF point(std::span<const double> x) {
        CF cf;
        cf.n = 1.0;
        cf.ls.assign(x.begin(), x.end());
        for (double v : x) cf.ss += v * v;
        return cf;
    }
    void add(const CF& other) {
        n += other.n;
        for (std::size_t j = 0; j < ls.size(); ++j) ls[j] += other.ls[j];
        ss += other.ss;
    }
    std::vector<double> centroid() const {
        std::vector<double> c(ls.size());
        for (std::size_t j = 0; j < ls.size(); ++j) c[j] = ls[j] / n;
        return c;
    }
    double radius() const {
        double norm2 = 0.0;
        for (double v : ls) norm2 += (v / n) * (v / n);
        return std::sqrt(std::max(0.0, ss / n - norm2));
    }
    static double merged_radius(const CF& a, const CF& b) {
        CF merged = a;
        merged.add(b);
        return merged.radius();
    }
};

double centroid_distance2(const CF& a, const CF& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.ls.size(); ++j) {
        const double diff = a.ls[j] / a.n - b.ls[j] / b.n;
        s += diff * diff;
    }
    return s;
}

struct Node {
    bool leaf = true;
    std::vector<CF> entries;
    std::vector<std::unique_ptr<Node>> children;  // aligned with entries when internal
};

using Split = std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>>;

// Splits an overfull node on its two farthest entries.
Split split_node(Node& node) {
    const std::size_t count = node.entries.size();
    std::size_t seed_a = 0, seed_b = 1;
    double worst = -1.0;
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = i + 1; j < count; ++j) {
            const double dd = centroid_distance2(node.entries[i], node.entries[j]);
            if (dd > worst) {
                worst = dd;
                seed_a = i;
                seed_b = j;
            }
        }
    auto left = std::make_unique<Node>();
    auto right = std::make_unique<Node>();
    left->leaf = right->leaf = node.leaf;
    for (std::size_t i = 0; i < count; ++i) {
        const double da = centroid_distance2(node.entries[i], node.entries[seed_a]);
        const double db = centroid_distance2(node.entries[i], node.entries[seed_b]);
        Node& target = (i == seed_b || db < da) && i != seed_a ? *right : *left;
        target.entries.push_back(std::move(node.entries[i]));
        if (!node.leaf) target.children.push_back(std::move(node.children[i]));
    }
    return {std::move(left), std::move(right)};
}

CF summarize(const Node& node) {
    CF total = node.entries.front();
    for (std::size_t i = 1; i < node.entries.size(); ++i) total.add(node.entries[i]);
    return total;
}

// Inserts a point CF; returns a split pair when this node overflowed.
std::optional<Split> insert_cf(Node& node, const CF& point, double threshold, int branching) {
    if (node.leaf) {
        std::size_t closest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < node.entries.size(); ++i) {
            const double dd = centroid_distance2(node.entries[i], point);
            if (dd < best) {
                best = dd;
                closest = i;
            }
        }
        if (!node.entries.empty() &&
            CF::merged_radius(node.entries[closest], point) <= threshold) {
            node.entries[closest].add(point);
            return std::nullopt;
        }
        node.entries.push_back(point);
    } else {
        std::size_t closest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < node.entries.size(); ++i) {
            const double dd = centroid_distance2(node.entries[i], point);
            if (dd < best) {
                best = dd;
                closest = i;
            }
        }
        auto child_split = insert_cf(*node.children[closest], point, threshold, branching);
        if (!child_split) {
            node.entries[closest].add(point);
            return std::nullopt;
        }
        node.entries[closest] = summarize(*child_split->first);
        node.children[closest] = std::move(child_split->first);
        node.entries.push_back(summarize(*child_split->second));
        node.children.push_back(std::move(child_split->second));
    }
    if (node.entries.size() > static_cast<std::size_t>(branching)) return split_node(node);
    return std::nullopt;
}

void collect_leaf_entries(const Node& node, std::vector<CF>& out) {
    if (node.leaf) {
        for (const auto& cf : node.entries) out.push_back(cf);
        return;
    }
    for (const auto& child : node.children) collect_leaf_entries(*child, out);
}

}  // namespace

ClusteringResult birch(const FeatureMatrix& m, int k, const BirchOptions& opt) {
    const std::size_t n = m.rows(), d = m.cols();
    if (n == 0) throw std::invalid_argument("birch: empty matrix");
    if (k < 1) throw std::invalid_argument("birch: k must be >= 1");
    if (opt.branching < 2) throw std::invalid_argument("birch: branching factor must be >= 2");
    if (opt.threshold <= 0.0) throw std::invalid_argument("birch: threshold must be > 0");

    auto root = std::make_unique<Node>();
    for (std::size_t i = 0; i < n; ++i) {
        auto split = insert_cf(*root, CF::point(m.row(i)), opt.threshold, opt.branching);
        if (split) {
            auto new_root = std::make_unique<Node>();
            new_root->leaf = false;
            new_root->entries.push_back(summarize(*split->first));
            new_root->children.push_back(std::move(split->first));
            new_root->entries.push_back(summarize(*split->second));
            new_root->children.push_back(std::move(split->second));
            root = std::move(new_root);
        }
    }

    std::vector<CF> leaves;
    collect_leaf_entries(*root, leaves);
    const std::size_t p = leaves.size();
    std::vector<double> centroids(p * d);
    for (std::size_t i = 0; i < p; ++i) {
        const auto c = leaves[i].centroid();
        std::copy(c.begin(), c.end(), centroids.begin() + static_cast<std::ptrdiff_t>(i * d));
    }

    // Global stage: ward over the sub-cluster centroids.
    const int global_k = std::min<int>(k, static_cast<int>(p));
    const auto global =
        detail::agglomerate_points(centroids.data(), p, d, global_k, Linkage::ward, std::nullopt);

    ClusteringResult result;
    result.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_e = 0;
        for (std::size_t e = 0; e < p; ++e) {
            const double dd = squared_distance(m.row(i), {centroids.data() + e * d, d});
            if (dd < best) {
                best = dd;
                best_e = e;
            }
        }
        result.labels[i] = global.labels[best_e];
    }
    result.k_found = detail::compact_labels(result.labels, global.k_found);
    result.empty_cluster_collapsed = result.k_found < k;
    return result;
}

}  // namespace autocluster
