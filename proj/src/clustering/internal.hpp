#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "autocluster/clustering.hpp"

namespace autocluster::detail {

// Agglomerative core over a raw row-major buffer; shared with birch's global
// clustering stage.
ClusteringResult agglomerate_points(const double* data, std::size_t n, std::size_t d, int k,
                                    Linkage linkage, std::optional<int> connectivity_neighbours);

// Remaps labels onto [0, k) by order of first appearance; returns k.
inline int compact_labels(std::vector<int>& labels, int max_label_count) {
    std::vector<int> remap(static_cast<std::size_t>(max_label_count), -1);
    int next = 0;
    for (int& lbl : labels) {
        if (remap[static_cast<std::size_t>(lbl)] < 0) remap[static_cast<std::size_t>(lbl)] = next++;
        lbl = remap[static_cast<std::size_t>(lbl)];
    }
    return next;
}

}  // namespace autocluster::detail
