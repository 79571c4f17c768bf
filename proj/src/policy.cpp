#include "netqos/policy.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <utility>

namespace netqos {

void PolicyConfig::validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must be in [0,1]");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
}

bool PolicyConfig::is_protected(Priority p) const {
    return std::find(protected_priorities.begin(), protected_priorities.end(), p) !=
           protected_priorities.end();
}

AdmissionDecision decide(double p_deteriorate, Priority priority, const PolicyConfig& config) {
    AdmissionDecision d;
    d.p_deteriorate = p_deteriorate;
    d.theta = config.theta;
    d.priority = priority;
    d.admit = config.is_protected(priority) || !(p_deteriorate > config.theta);
    return d;
}

PredictFn model_predictor(const Model& model) {
    if (model.ds_config.tdr_channels)
        throw ConfigMismatch("models with TDR channels cannot run in the closed loop: "
                             "per-connection records are not observable mid-run");
    auto m = std::make_shared<const Model>(model);
    return [m](const LiveState& state, std::uint32_t cell_id) -> double {
        const std::size_t w = static_cast<std::size_t>(m->ds_config.window);
        if (state.step_index + 1 < w) return 0.0;

        const Topology& topo = *state.topology;
        const std::size_t self = topo.index_of(cell_id);

        StateTensor t;
        t.channels = m->ds_config.n_channels();
        t.window = w;
        t.cells = m->ds_config.n_cell_slots();
        t.values.assign(t.channels * t.window * t.cells, 0.0f);
        t.cell_mask.assign(t.cells, 0);

        // Slot order must match the dataset builder: self, then neighbors by
        // (distance, cell_id).
        std::vector<std::size_t> slots;
        slots.push_back(self);
        const auto& nb = topo.neighbors[self];
        for (std::size_t i = 0; i < nb.size() && slots.size() < t.cells; ++i)
            slots.push_back(nb[i]);
        for (std::size_t c = 0; c < slots.size(); ++c) t.cell_mask[c] = 1;

        const auto& hist = *state.kpi_history;
        const std::size_t s_first = state.step_index + 1 - w;
        for (std::size_t c = 0; c < slots.size(); ++c) {
            for (std::size_t wi = 0; wi < w; ++wi) {
                const auto& vals = hist[slots[c]][s_first + wi];
                for (std::size_t k = 0; k < kKpiCount; ++k)
                    t.at(k, wi, c) = static_cast<float>(vals[k]);
            }
        }
        return model_predict(*m, t).p_deteriorate;
    };
}

namespace {

double nearest_rank_p95(std::vector<double>& values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(n)));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

VariantStats variant_stats(const SimOutput& out, const Topology& topo, std::size_t n_steps) {
    const std::size_t n_cells = topo.cells.size();
    VariantStats v;
    v.cells.resize(n_cells);
    v.cell_step_delay.assign(n_cells, std::vector<double>(n_steps, 0.0));

    std::vector<std::vector<double>> delays(n_cells);
    for (const QosSample& q : out.trace.qos_samples)
        delays[topo.index_of(q.cell_id)].push_back(q.delay_ms);

    std::vector<double> all;
    double all_sum = 0.0;
    for (std::size_t c = 0; c < n_cells; ++c) {
        CellDelayStats& cd = v.cells[c];
        cd.cell_id = topo.cells[c].cell_id;
        double sum = 0.0;
        for (double d : delays[c]) sum += d;
        cd.mean_delay_ms =
            delays[c].empty() ? 0.0 : sum / static_cast<double>(delays[c].size());
        all_sum += sum;
        all.insert(all.end(), delays[c].begin(), delays[c].end());
        cd.p95_delay_ms = nearest_rank_p95(delays[c]);

        for (std::size_t s = 0; s < n_steps; ++s) {
            const StepCellStats& st = out.per_cell_step[c * n_steps + s];
            cd.admitted += st.admitted;
            cd.rejected_low += st.rejected_low;
            cd.rejected_high += st.rejected_high;
            v.offered += st.offered_requests;
            if (st.qos_samples > 0)
                v.cell_step_delay[c][s] = st.delay_sum_ms / st.qos_samples;
        }
        v.admitted += cd.admitted;
        v.rejected_low += cd.rejected_low;
        v.rejected_high += cd.rejected_high;
    }
    v.mean_delay_ms = all.empty() ? 0.0 : all_sum / static_cast<double>(all.size());
    v.p95_delay_ms = nearest_rank_p95(all);
    return v;
}

} // namespace

ReplayResult replay(const SimConfig& sim_config, const PredictFn& predictor,
                    const PolicyConfig& policy_config, int threads) {
    sim_config.validate();
    policy_config.validate();

    ReplayResult out;
    out.baseline = simulate(sim_config, nullptr, nullptr, threads);

    const Topology topo = sim_config.build_topology();
    std::vector<double> p_cache(topo.cells.size(), 0.0);
    const AdmissionFn admit = [&](const ArrivalRequest& req) {
        return decide(p_cache[topo.index_of(req.cell_id)], req.priority, policy_config).admit;
    };
    const StepObserver observe = [&](const LiveState& state) {
        // Refresh the probabilities consumed by the next step's arrivals.
        parallel_for(topo.cells.size(), threads, [&](std::size_t c) {
            p_cache[c] = predictor(state, topo.cells[c].cell_id);
        });
    };
    out.policy = simulate(sim_config, admit, observe, threads);

    out.report.theta = policy_config.theta;
    out.report.topology = topo;
    out.report.n_steps = sim_config.n_steps();
    out.report.baseline = variant_stats(out.baseline, topo, out.report.n_steps);
    out.report.policy = variant_stats(out.policy, topo, out.report.n_steps);
    return out;
}

ReplayResult replay(const SimConfig& sim_config, const Model& model,
                    const PolicyConfig& policy_config, int threads) {
    return replay(sim_config, model_predictor(model), policy_config, threads);
}

void write_report_csv(const PolicyReport& report, const std::string& path) {
    std::ostringstream os;
    os << "variant,cell_id,mean_delay_ms,p95_delay_ms,admitted,rejected_low,rejected_high\n";
    const auto emit = [&os](const char* variant, const VariantStats& v) {
        for (const CellDelayStats& c : v.cells)
            os << variant << "," << c.cell_id << "," << format_real(c.mean_delay_ms) << ","
               << format_real(c.p95_delay_ms) << "," << c.admitted << "," << c.rejected_low << ","
               << c.rejected_high << "\n";
    };
    emit("baseline", report.baseline);
    emit("policy", report.policy);
    write_text_file(path, os.str());
}

namespace {

std::string ramp_color(double t) {
    t = std::min(1.0, std::max(0.0, t));
    const int r = static_cast<int>(std::lround(255.0 * t));
    const int g = 64;
    const int b = 255 - r;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string fmt_px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

/// One panel's cells; identical delays yield byte-identical markup, which the
/// theta = 1 neutrality contract relies on.
std::string panel_cells(const PolicyReport& report, const VariantStats& v, double dmin,
                        double dmax) {
    const auto& cells = report.topology.cells;
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i == 0 || cells[i].x_km < xmin) xmin = cells[i].x_km;
        if (i == 0 || cells[i].x_km > xmax) xmax = cells[i].x_km;
        if (i == 0 || cells[i].y_km < ymin) ymin = cells[i].y_km;
        if (i == 0 || cells[i].y_km > ymax) ymax = cells[i].y_km;
    }
    const double xspan = xmax - xmin > 1e-12 ? xmax - xmin : 1.0;
    const double yspan = ymax - ymin > 1e-12 ? ymax - ymin : 1.0;
    const double dspan = dmax - dmin > 1e-12 ? dmax - dmin : 1.0;

    std::ostringstream os;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double px = 20.0 + (cells[i].x_km - xmin) / xspan * 360.0;
        const double py = 20.0 + (ymax - cells[i].y_km) / yspan * 360.0;
        const double t = (v.cells[i].mean_delay_ms - dmin) / dspan;
        os << "<circle cx=\"" << fmt_px(px) << "\" cy=\"" << fmt_px(py)
           << "\" r=\"10\" fill=\"" << ramp_color(t) << "\" stroke=\"#404040\"/>\n";
    }
    return os.str();
}

} // namespace

void emit_delay_comparison(const PolicyReport& report, const std::string& path,
                           ComparisonFormat format) {
    if (format == ComparisonFormat::csv) {
        std::ostringstream os;
        os << "cell_id,baseline_mean_delay_ms,policy_mean_delay_ms\n";
        for (std::size_t i = 0; i < report.topology.cells.size(); ++i)
            os << report.topology.cells[i].cell_id << ","
               << format_real(report.baseline.cells[i].mean_delay_ms) << ","
               << format_real(report.policy.cells[i].mean_delay_ms) << "\n";
        write_text_file(path, os.str());
        return;
    }

    double dmin = 0.0, dmax = 0.0;
    bool first = true;
    for (const VariantStats* v : {&report.baseline, &report.policy}) {
        for (const CellDelayStats& c : v->cells) {
            if (first || c.mean_delay_ms < dmin) dmin = c.mean_delay_ms;
            if (first || c.mean_delay_ms > dmax) dmax = c.mean_delay_ms;
            first = false;
        }
    }

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"940\" height=\"470\" "
          "viewBox=\"0 0 940 470\">\n";
    os << "<rect width=\"940\" height=\"470\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"220\" y=\"28\" text-anchor=\"middle\" font-family=\"monospace\" "
          "font-size=\"16\">baseline</text>\n";
    os << "<text x=\"640\" y=\"28\" text-anchor=\"middle\" font-family=\"monospace\" "
          "font-size=\"16\">policy</text>\n";
    os << "<g transform=\"translate(20,40)\">\n"
       << panel_cells(report, report.baseline, dmin, dmax) << "</g>\n";
    os << "<g transform=\"translate(440,40)\">\n"
       << panel_cells(report, report.policy, dmin, dmax) << "</g>\n";

    // Shared linear scale, annotated in milliseconds (high at the top).
    for (int i = 0; i < 10; ++i) {
        const double t = (9 - i + 0.5) / 10.0;
        os << "<rect x=\"880\" y=\"" << (60 + i * 36) << "\" width=\"24\" height=\"36\" fill=\""
           << ramp_color(t) << "\"/>\n";
    }
    os << "<text x=\"876\" y=\"56\" text-anchor=\"end\" font-family=\"monospace\" "
          "font-size=\"12\">"
       << format_real(dmax) << " ms</text>\n";
    os << "<text x=\"876\" y=\"424\" text-anchor=\"end\" font-family=\"monospace\" "
          "font-size=\"12\">"
       << format_real(dmin) << " ms</text>\n";
    os << "</svg>\n";
    write_text_file(path, os.str());
}

} // namespace netqos
