#include "netqos/analysis.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"
#include "netqos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace netqos {

namespace {

constexpr std::uint64_t CH_KMEANS = 200;

struct Moments {
    double mean = 0.0;
    double var = 0.0; // population
};

Moments moments(const std::vector<double>& x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    const double n = static_cast<double>(x.size());
    Moments m;
    m.mean = sum / n;
    double acc = 0.0;
    for (double v : x) acc += (v - m.mean) * (v - m.mean);
    m.var = acc / n;
    return m;
}

} // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw LengthMismatch("series lengths differ: " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.size() < 2) throw DegenerateSeries("need at least 2 points");
    const Moments mx = moments(x);
    const Moments my = moments(y);
    if (mx.var <= 0.0 || my.var <= 0.0) throw DegenerateSeries("zero-variance series");
    double cov = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) cov += (x[i] - mx.mean) * (y[i] - my.mean);
    cov /= static_cast<double>(x.size());
    double rho = cov / (std::sqrt(mx.var) * std::sqrt(my.var));
    return std::min(1.0, std::max(-1.0, rho));
}

CorrMatrix correlation_matrix(const Trace& trace, std::optional<std::uint32_t> cell_scope) {
    if (trace.kpi_frames.empty()) throw EmptyTrace("trace has no KPI frames");

    // Series = KPI values concatenated in canonical (cell, timestamp) order.
    std::vector<std::vector<double>> series(kKpiCount);
    for (const auto& f : trace.kpi_frames) {
        if (cell_scope && f.cell_id != *cell_scope) continue;
        for (std::size_t k = 0; k < kKpiCount; ++k) series[k].push_back(f.values[k]);
    }
    if (series[0].empty()) throw EmptyTrace("no KPI frames in scope");

    CorrMatrix m;
    for (const auto& name : kpi_names()) m.labels.push_back(name);
    m.abs_rho.assign(kKpiCount * kKpiCount, 0.0);
    m.constant.assign(kKpiCount, 0);

    std::vector<Moments> mom(kKpiCount);
    for (std::size_t k = 0; k < kKpiCount; ++k) {
        mom[k] = moments(series[k]);
        if (mom[k].var <= 0.0 || series[k].size() < 2) m.constant[k] = 1;
    }
    for (std::size_t i = 0; i < kKpiCount; ++i) {
        if (m.constant[i]) continue; // flagged row stays zero
        m.abs_rho[i * kKpiCount + i] = 1.0;
        for (std::size_t j = i + 1; j < kKpiCount; ++j) {
            if (m.constant[j]) continue;
            const double r = std::abs(pearson(series[i], series[j]));
            m.abs_rho[i * kKpiCount + j] = r;
            m.abs_rho[j * kKpiCount + i] = r;
        }
    }
    return m;
}

namespace {

std::string svg_heatmap(const CorrMatrix& m) {
    const std::size_t n = m.labels.size();
    const int cell = 64;
    const int left = 220;  // row label gutter
    const int top = 220;   // column label gutter
    const int width = left + cell * static_cast<int>(n) + 16;
    const int height = top + cell * static_cast<int>(n) + 16;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
       << "\" fill=\"#ffffff\"/>\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            // grayscale value = 1 - |rho|: perfect correlation renders black
            const int g = static_cast<int>(std::lround(255.0 * (1.0 - m.at(i, j))));
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", g, g, g);
            os << "<rect x=\"" << left + static_cast<int>(j) * cell << "\" y=\""
               << top + static_cast<int>(i) * cell << "\" width=\"" << cell << "\" height=\""
               << cell << "\" fill=\"" << color << "\" stroke=\"#808080\"/>\n";
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int y = top + static_cast<int>(i) * cell + cell / 2 + 5;
        os << "<text x=\"" << left - 8 << "\" y=\"" << y
           << "\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"end\">" << m.labels[i]
           << "</text>\n";
    }
    for (std::size_t j = 0; j < n; ++j) {
        const int x = left + static_cast<int>(j) * cell + cell / 2 + 5;
        os << "<text x=\"" << x << "\" y=\"" << top - 8
           << "\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"start\" transform=\"rotate(-90 "
           << x << " " << top - 8 << ")\">" << m.labels[j] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace

void export_heatmap(const CorrMatrix& matrix, const std::string& path, HeatmapFormat format) {
    if (format == HeatmapFormat::csv) {
        std::ostringstream os;
        for (const auto& label : matrix.labels) os << "," << label;
        os << "\n";
        const std::size_t n = matrix.labels.size();
        for (std::size_t i = 0; i < n; ++i) {
            os << matrix.labels[i];
            for (std::size_t j = 0; j < n; ++j) os << "," << format_real(matrix.at(i, j));
            os << "\n";
        }
        write_text_file(path, os.str());
    } else {
        write_text_file(path, svg_heatmap(matrix));
    }
}

std::vector<TrafficProfile> traffic_profiles(const Trace& trace) {
    if (trace.kpi_frames.empty()) throw EmptyTrace("trace has no KPI frames");
    std::map<std::uint32_t, std::array<double, 48>> sums;
    std::map<std::uint32_t, std::array<std::size_t, 48>> counts;
    for (const auto& cell : trace.topology.cells) {
        sums[cell.cell_id] = {};
        counts[cell.cell_id] = {};
    }
    const std::size_t dl = static_cast<std::size_t>(Kpi::prb_util_dl_rate);
    for (const auto& f : trace.kpi_frames) {
        const int hour = trace.minute_of_day(f.timestamp) / 60;
        const std::size_t slot =
            (is_weekend(trace.day_of_week(f.timestamp)) ? 24u : 0u) + static_cast<std::size_t>(hour);
        sums[f.cell_id][slot] += f.values[dl];
        counts[f.cell_id][slot] += 1;
    }
    std::vector<TrafficProfile> out;
    for (const auto& cell : trace.topology.cells) {
        TrafficProfile p;
        p.cell_id = cell.cell_id;
        const auto& s = sums[cell.cell_id];
        const auto& c = counts[cell.cell_id];
        for (std::size_t i = 0; i < 48; ++i)
            p.values[i] = c[i] ? s[i] / static_cast<double>(c[i]) : 0.0;
        out.push_back(p);
    }
    return out;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

} // namespace

Clustering kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed) {
    if (points.empty()) throw EmptyInput("no points to cluster");
    if (k < 1 || static_cast<std::size_t>(k) > points.size())
        throw KTooLarge("k=" + std::to_string(k) + " with " + std::to_string(points.size()) +
                        " points");
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw LengthMismatch("points have mixed dimensionality");

    KeyedRng rng(seed, CH_KMEANS);

    // k-means++ seeding: first centroid uniform, then proportional to squared
    // distance from the nearest chosen centroid.
    std::vector<std::vector<double>> centroids;
    centroids.push_back(points[rng.below(n)]);
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (target < acc) {
                    pick = i;
                    break;
                }
                pick = i; // fall through to the last point on rounding
            }
        } else {
            pick = rng.below(n); // all points coincide with a centroid
        }
        centroids.push_back(points[pick]);
    }

    Clustering result;
    result.k = k;
    result.assignments.assign(n, 0);

    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(points[i], centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) { // strict: ties keep the lower centroid index
                    best_d = d;
                    best = c;
                }
            }
            if (result.assignments[i] != best) {
                result.assignments[i] = best;
                changed = true;
            }
            inertia += best_d;
        }
        result.inertia = inertia;
        result.inertia_history.push_back(inertia);
        if (!changed && iter > 0) break;

        // Recompute centroids; re-seed empty clusters with the point farthest
        // from its centroid.
        std::vector<std::vector<double>> next(static_cast<std::size_t>(k),
                                              std::vector<double>(dim, 0.0));
        std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(result.assignments[i]);
            for (std::size_t d = 0; d < dim; ++d) next[c][d] += points[i][d];
            count[c] += 1;
        }
        for (int c = 0; c < k; ++c) {
            auto cu = static_cast<std::size_t>(c);
            if (count[cu] == 0) {
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(
                        points[i], centroids[static_cast<std::size_t>(result.assignments[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                next[cu] = points[far];
            } else {
                for (std::size_t d = 0; d < dim; ++d)
                    next[cu][d] /= static_cast<double>(count[cu]);
            }
        }
        centroids = std::move(next);
    }

    result.centroids = std::move(centroids);
    return result;
}

Clustering cluster_profiles(const std::vector<TrafficProfile>& profiles, int k,
                            std::uint64_t seed) {
    if (profiles.empty()) throw EmptyInput("no traffic profiles");
    const std::size_t n = profiles.size();
    std::vector<std::vector<double>> points(n, std::vector<double>(48, 0.0));
    for (std::size_t d = 0; d < 48; ++d) {
        double sum = 0.0;
        for (const auto& p : profiles) sum += p.values[d];
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (const auto& p : profiles) var += (p.values[d] - mean) * (p.values[d] - mean);
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd < 1e-12) continue; // constant dimension contributes nothing
        for (std::size_t i = 0; i < n; ++i)
            points[i][d] = (profiles[i].values[d] - mean) / sd;
    }
    Clustering result = kmeans(points, k, seed);
    for (const auto& p : profiles) result.cell_ids.push_back(p.cell_id);
    return result;
}

double region_purity(const Clustering& clustering, const Topology& topology) {
    if (clustering.cell_ids.empty()) throw EmptyInput("clustering has no cell ids");
    // cluster -> region -> count
    std::map<int, std::map<int, std::size_t>> table;
    for (std::size_t i = 0; i < clustering.cell_ids.size(); ++i) {
        const CellInfo* cell = topology.find(clustering.cell_ids[i]);
        if (!cell) throw UnknownCell("cell_id " + std::to_string(clustering.cell_ids[i]));
        table[clustering.assignments[i]][static_cast<int>(cell->region_type)] += 1;
    }
    std::size_t majority = 0;
    for (const auto& [cluster, regions] : table) {
        std::size_t best = 0;
        for (const auto& [region, count] : regions) best = std::max(best, count);
        majority += best;
    }
    return static_cast<double>(majority) / static_cast<double>(clustering.cell_ids.size());
}

} // namespace netqos
