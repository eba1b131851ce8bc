#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace pxlog {

struct EmbedParams {
    int n_neighbors{5};
    double min_dist{0.005};
    double spread{1.0};
    int n_epochs{200};
    double learning_rate{1.0};
    int negative_sample_rate{5};
};

struct ClusterParams {
    double eps{1.1};
    int min_samples{30};
};

// In-place per-column standardization; zero-variance columns become all zeros.
void zscore_columns(std::vector<std::vector<double>>& rows);

// Curve parameters (a, b) such that 1/(1 + a d^(2b)) tracks the min_dist/
// spread membership falloff; fitted once per embedding run.
std::pair<double, double> fit_ab_params(double min_dist, double spread);

// Neighbor-embedding of pre-scaled feature rows into 2-D: exact k-NN graph,
// smooth-knn bandwidth calibration, fuzzy set union, then negative-sampling
// SGD over the cross-entropy layout. Single-threaded with a fixed update
// order, so one seed gives one embedding, bit for bit.
std::vector<std::array<double, 2>> embed_2d(const std::vector<std::vector<double>>& rows,
                                            const EmbedParams& params, std::uint64_t seed);

// Plain density clustering on 2-D points; labels are 0..k-1, noise is -1.
// Neighborhood counts include the point itself.
std::vector<int> dbscan(const std::vector<std::array<double, 2>>& pts, const ClusterParams& params);

}  // namespace pxlog
