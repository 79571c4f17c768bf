#pragma once

#include "netqos/model.hpp"
#include "netqos/netsim.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace netqos {

struct PolicyConfig {
    double theta = 0.5; // reject when p_deteriorate exceeds this
    std::vector<Priority> protected_priorities = {Priority::high};
    int horizon = 2; // decision refresh cadence context; set from the model

    void validate() const; // throws ConfigError unless theta in [0,1]
    bool is_protected(Priority p) const;
};

struct AdmissionDecision {
    std::uint64_t request_id = 0;
    bool admit = true;
    double p_deteriorate = 0.0;
    double theta = 1.0;
    Priority priority = Priority::low;
};

/// REJECT iff the priority is unprotected and p exceeds theta.
AdmissionDecision decide(double p_deteriorate, Priority priority, const PolicyConfig& config);

/// Per-cell deterioration probability queried after every emitted step, on the
/// realized telemetry of the run in flight.
using PredictFn = std::function<double(const LiveState& state, std::uint32_t cell_id)>;

/// Wraps a trained model: builds the lookback tensor from live KPI history
/// (identically to the dataset builder) and runs the model. Returns 0 while
/// fewer than `window` steps of history exist. Throws ConfigMismatch for
/// models trained with TDR channels (not observable mid-run).
PredictFn model_predictor(const Model& model);

struct CellDelayStats {
    std::uint32_t cell_id = 0;
    double mean_delay_ms = 0.0;
    double p95_delay_ms = 0.0;
    std::uint64_t admitted = 0;
    std::uint64_t rejected_low = 0;
    std::uint64_t rejected_high = 0;
};

struct VariantStats {
    double mean_delay_ms = 0.0; // over every QoS sample of the run
    double p95_delay_ms = 0.0;  // nearest-rank percentile over the same
    std::uint64_t offered = 0;
    std::uint64_t admitted = 0;
    std::uint64_t rejected_low = 0;
    std::uint64_t rejected_high = 0;
    std::vector<CellDelayStats> cells; // topology order
    // per-cell per-step mean delay for plotting, [cell_index][step]; 0 where
    // a cell carried no traffic that step
    std::vector<std::vector<double>> cell_step_delay;
};

struct PolicyReport {
    double theta = 1.0;
    Topology topology;
    std::size_t n_steps = 0;
    VariantStats baseline;
    VariantStats policy;
};

/// Two sample-coupled runs of the same (config, seed): an admit-all baseline
/// and a closed-loop policy run that queries the predictor on its own realized
/// telemetry. Returns the comparison; the runs' full outputs are exposed for
/// artifact writing.
struct ReplayResult {
    PolicyReport report;
    SimOutput baseline;
    SimOutput policy;
};

ReplayResult replay(const SimConfig& sim_config, const PredictFn& predictor,
                    const PolicyConfig& policy_config, int threads = 1);
ReplayResult replay(const SimConfig& sim_config, const Model& model,
                    const PolicyConfig& policy_config, int threads = 1);

/// report.csv: variant,cell_id,mean_delay_ms,p95_delay_ms,admitted,rejected_low,rejected_high
void write_report_csv(const PolicyReport& report, const std::string& path);

enum class ComparisonFormat { csv, svg };

/// csv: per-cell mean delay under both variants. svg: two cell maps colored by
/// mean delay on a shared linear scale annotated in milliseconds.
void emit_delay_comparison(const PolicyReport& report, const std::string& path,
                           ComparisonFormat format);

} // namespace netqos
