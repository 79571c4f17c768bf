#pragma once

#include "netqos/kvconfig.hpp"
#include "netqos/telemetry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace netqos {

struct DatasetConfig; // dataset.hpp

struct Event {
    std::vector<std::uint32_t> cell_ids;
    std::int64_t start_ts = 0; // applies to steps in [start_ts, end_ts)
    std::int64_t end_ts = 0;
    double load_multiplier = 1.0;
};

struct SimConfig {
    // topology
    std::uint32_t n_cells = 9;
    double spacing_km = 0.5;
    std::vector<RegionType> region_pattern = {RegionType::work, RegionType::residential,
                                              RegionType::leisure}; // cycled over cells
    double capacity = 80.0; // resource units per minute, uniform

    // time
    std::uint32_t days = 1;
    int step_minutes = 15;
    int start_dow = 0; // 0 = Monday

    // load model. Target active connections per cell is
    //   users_per_cell * region profile * event multipliers * AR(1) lognormal noise
    // and offered load is active connections * demand_per_connection.
    double users_per_cell = 30.0;
    double demand_per_connection = 2.0; // resource units per minute
    double mean_connection_steps = 2.0;
    double load_noise_sigma = 0.08; // stationary sigma of the lognormal factor
    double load_noise_phi = 0.95;   // AR(1) persistence in log space

    // congestion
    double base_delay_ms = 20.0;
    double utilization_cap = 0.99;
    double loss_knee = 0.85;
    double congestion_threshold = 0.85;

    // observation noise
    double kpi_noise_sigma = 0.02; // additive Gaussian on rate KPIs, truncated to [0,1]
    double qos_noise_sigma = 0.05; // per-sample lognormal on delay/jitter
    double mr_noise_sigma = 1.0;   // dB

    // traffic mix
    double low_priority_fraction = 0.5;
    std::array<double, 4> service_mix = {0.4, 0.2, 0.3, 0.1}; // web, email, streaming, other

    std::vector<Event> events;
    std::uint64_t seed = 0;

    std::size_t n_steps() const { return static_cast<std::size_t>(days) * 1440 / step_minutes; }

    /// Throws ConfigError if any invariant fails.
    void validate() const;

    Topology build_topology() const;
    RegionType region_of(std::uint32_t cell_index) const;

    static SimConfig from_kv(const KvConfig& kv);
    static SimConfig from_file(const std::string& path);
    std::string to_text() const; // canonical form, stable for hashing
};

struct GroundTruthRow {
    double offered_load = 0.0; // resource units per minute
    double utilization = 0.0;  // min(offered / capacity, utilization_cap)
    bool congested = false;    // utilization >= congestion_threshold
};

struct GroundTruth {
    std::vector<std::int64_t> timestamps;  // step grid
    std::vector<std::uint32_t> cell_ids;   // topology order
    std::vector<GroundTruthRow> rows;      // [cell_index * n_steps + step_index]

    const GroundTruthRow& at(std::size_t cell_index, std::size_t step_index) const {
        return rows[cell_index * timestamps.size() + step_index];
    }
};

void write_ground_truth(const GroundTruth& gt, const std::string& path);
GroundTruth read_ground_truth(const std::string& path);

/// One connection request surfacing at the admission boundary.
struct ArrivalRequest {
    std::uint32_t cell_id = 0;
    std::int64_t timestamp = 0;
    std::uint64_t request_id = 0; // stable across coupled runs
    Priority priority = Priority::low;
    ServiceType service = ServiceType::web;
    std::uint32_t user_id = 0;
    int duration_steps = 1;
};

/// Return true to admit. Invoked in deterministic order (cell index, then
/// arrival index) for every request, in both baseline and policy runs.
using AdmissionFn = std::function<bool(const ArrivalRequest&)>;

/// Realized per-step telemetry exposed to the step observer while a run is in
/// flight; used by closed-loop policies to form their next decision.
struct LiveState {
    const Topology* topology = nullptr;
    std::int64_t timestamp = 0;   // step just emitted
    std::size_t step_index = 0;
    // kpi_history[cell_index][step_index][kpi]
    const std::vector<std::vector<std::array<double, kKpiCount>>>* kpi_history = nullptr;
};

using StepObserver = std::function<void(const LiveState&)>;

struct StepCellStats {
    std::uint32_t offered_requests = 0;
    std::uint32_t admitted = 0;
    std::uint32_t rejected_low = 0;
    std::uint32_t rejected_high = 0;
    std::uint32_t qos_samples = 0;
    double delay_sum_ms = 0.0; // over this step's QoS samples
};

struct SimOutput {
    Trace trace;
    GroundTruth gt;
    std::vector<StepCellStats> per_cell_step; // [cell_index * n_steps + step_index]
};

/// Deterministic diurnal activity multiplier for a region. Two Gaussian bumps
/// over minute-of-day (periodic), scaled per weekday/weekend, plus a small
/// floor. Work activity collapses on weekends; leisure more than doubles.
double region_load_profile(RegionType region, int day_of_week, int minute_of_day);

/// M/M/1-style delay law: base_delay_ms / (1 - min(rho, utilization_cap)).
double cell_delay(double utilization, const SimConfig& config);

/// Full closed-loop simulation. `admission` may be null (admit everything);
/// `observer` may be null. Arrival streams depend only on (config, seed), so
/// runs with different admission policies stay sample-coupled.
SimOutput simulate(const SimConfig& config, const AdmissionFn& admission = nullptr,
                   const StepObserver& observer = nullptr, int threads = 1);

/// Admit-all wrapper: the synthetic telemetry generator.
inline SimOutput generate_trace(const SimConfig& config, int threads = 1) {
    return simulate(config, nullptr, nullptr, threads);
}

/// Accuracy of the clairvoyant rule that predicts each example's label from
/// the true (realized) utilization path. Upper-bounds any learner on this
/// trace; limited only by per-sample QoS measurement noise.
double oracle_bayes_accuracy(const Trace& trace, const GroundTruth& gt,
                             const SimConfig& sim_config, const DatasetConfig& ds_config);

} // namespace netqos
