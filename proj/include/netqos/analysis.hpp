#pragma once

#include "netqos/telemetry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netqos {

/// Signed population-statistics Pearson coefficient, clamped to [-1, 1].
/// Throws LengthMismatch on unequal lengths, DegenerateSeries on n < 2 or a
/// zero-variance input.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// |rho| matrix over the KPI registry. Constant series get a flagged all-zero
/// row/column instead of an error.
struct CorrMatrix {
    std::vector<std::string> labels;
    std::vector<double> abs_rho;         // row-major labels.size()^2
    std::vector<std::uint8_t> constant;  // per series

    double at(std::size_t i, std::size_t j) const { return abs_rho[i * labels.size() + j]; }
};

/// KPI correlation structure of a trace, pooled over all cells (series
/// concatenated in cell order) or restricted to one cell. Throws EmptyTrace.
CorrMatrix correlation_matrix(const Trace& trace,
                              std::optional<std::uint32_t> cell_scope = std::nullopt);

enum class HeatmapFormat { csv, svg };

/// csv: `,label1,...` header then one labeled row per series. svg: 64-px grid,
/// grayscale 1 - |rho|, row and column labels, no external assets. Output is
/// byte-deterministic.
void export_heatmap(const CorrMatrix& matrix, const std::string& path, HeatmapFormat format);

/// Mean downlink PRB utilization per (day type, hour): weekday hours 0..23
/// then weekend hours 0..23. Day types absent from the trace stay zero.
struct TrafficProfile {
    std::uint32_t cell_id = 0;
    std::array<double, 48> values{};
};

std::vector<TrafficProfile> traffic_profiles(const Trace& trace); // throws EmptyTrace

struct Clustering {
    int k = 0;
    std::vector<std::uint32_t> cell_ids;    // empty when clustering raw points
    std::vector<int> assignments;           // per point
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    std::vector<double> inertia_history;    // per Lloyd iteration, non-increasing
};

/// Lloyd's algorithm with seeded k-means++ initialization on raw vectors.
/// Nearest-centroid ties break toward the lower centroid index; empty clusters
/// are re-seeded with the point farthest from its centroid. Deterministic.
/// Throws EmptyInput and KTooLarge.
Clustering kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed);

/// Traffic-profile clustering: per-dimension z-scoring (zero-variance
/// dimensions dropped to zero), then kmeans. cell_ids filled from profiles.
Clustering cluster_profiles(const std::vector<TrafficProfile>& profiles, int k,
                            std::uint64_t seed);

/// Fraction of cells whose cluster's majority region matches their own region.
double region_purity(const Clustering& clustering, const Topology& topology);

} // namespace netqos
