#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "wildfire/dataset.hpp"

namespace wildfire {

struct SmoteConfig {
    int k_neighbors = 5;
    std::uint64_t seed = 0;
};

struct SmoteResult {
    // Input rows first (unchanged, same order), synthetic rows appended.
    Dataset rows;
    std::size_t n_original = 0;
    // For each synthetic row, the input indices of the minority row it was
    // grown from and the neighbor it moved toward (equal when duplicated).
    std::vector<std::pair<std::size_t, std::size_t>> parents;
};

// Oversamples the minority class of a two-class dataset until both classes
// have the same size. Each synthetic row is x + lambda * (nn - x) with
// lambda uniform in [0, 1) and nn drawn from the k nearest minority
// neighbors of x (Euclidean, ties to the lower row index). Minority rows are
// used as bases round-robin in input order. A single minority row is
// duplicated. Throws Contract unless exactly two classes are present.
SmoteResult smote(const Dataset& rows, const SmoteConfig& cfg);

}  // namespace wildfire
