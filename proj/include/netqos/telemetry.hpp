#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace netqos {

// Closed, ordered KPI registry. Every KpiFrame carries exactly these eight
// values in this order. All are rates in [0,1] except rrc_userconnmax,
// which is a non-negative connection count.
inline constexpr std::size_t kKpiCount = 8;

enum class Kpi : std::size_t {
    prb_util_ul_rate = 0,
    prb_util_dl_rate,
    pdcch_util_rate,
    prach_util_rate,
    rrc_attconnestab_ue_rate,
    ho_succoutintraenb_rate,
    rrc_userconnmax,
    erab_estab_succ_rate,
};

const std::array<std::string, kKpiCount>& kpi_names();
bool kpi_is_rate(std::size_t index); // false only for rrc_userconnmax

enum class RegionType : std::uint8_t { work = 0, residential, leisure };
enum class ServiceType : std::uint8_t { web = 0, email, streaming, other };
enum class Priority : std::uint8_t { low = 0, high };

const std::string& region_name(RegionType r);
RegionType region_from_name(const std::string& s);
const std::string& service_name(ServiceType s);
ServiceType service_from_name(const std::string& s);
const std::string& priority_name(Priority p);
Priority priority_from_name(const std::string& s);

struct KpiFrame {
    std::uint32_t cell_id = 0;
    std::int64_t timestamp = 0; // minutes since trace epoch
    std::array<double, kKpiCount> values{};
};

/// DMU record: per-connection QoS as seen by the user equipment.
struct QosSample {
    std::int64_t timestamp = 0;
    std::uint32_t cell_id = 0;
    std::uint32_t user_id = 0;
    double delay_ms = 0.0;
    double jitter_ms = 0.0;
    double loss_rate = 0.0;
};

/// TDR record: one data connection with its time span and traffic class.
struct TrafficRecord {
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    std::uint32_t cell_id = 0;
    std::uint32_t user_id = 0;
    std::uint64_t bytes = 0;
    ServiceType service_type = ServiceType::web;
    Priority priority = Priority::low;
};

/// MR record: per-user radio quality measurements.
struct MeasureReport {
    std::int64_t timestamp = 0;
    std::uint32_t cell_id = 0;
    std::uint32_t user_id = 0;
    double sinr_db = 0.0;
    double rsrq_db = 0.0;
};

struct CellInfo {
    std::uint32_t cell_id = 0;
    double x_km = 0.0;
    double y_km = 0.0;
    RegionType region_type = RegionType::work;
    double capacity = 1.0; // resource units per minute
};

struct Topology {
    std::vector<CellInfo> cells; // sorted by cell_id

    /// neighbors[i] lists the other cells' indices into `cells`, sorted by
    /// Euclidean distance ascending, ties broken by lower cell_id.
    std::vector<std::vector<std::size_t>> neighbors;

    void rebuild_neighbors();
    const CellInfo* find(std::uint32_t cell_id) const;
    std::size_t index_of(std::uint32_t cell_id) const; // throws UnknownCell
};

struct Trace {
    Topology topology;
    std::vector<KpiFrame> kpi_frames;       // sorted by (cell_id, timestamp)
    std::vector<QosSample> qos_samples;     // sorted by (cell_id, timestamp, user_id)
    std::vector<TrafficRecord> traffic_records;
    std::vector<MeasureReport> measure_reports;
    int start_dow = 0;       // day of week of minute 0; 0 = Monday
    int step_minutes = 15;

    int day_of_week(std::int64_t timestamp) const {
        return static_cast<int>((start_dow + timestamp / 1440) % 7);
    }
    int minute_of_day(std::int64_t timestamp) const {
        return static_cast<int>(timestamp % 1440);
    }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Pure check of every type invariant; violations are data, not errors.
ValidationReport validate_trace(const Trace& trace);

/// Reads topology.csv, kpi.csv, qos.csv, tdr.csv, mr.csv (+ meta.csv) from a
/// directory, normalizes row order, and validates. Throws MissingFile,
/// MalformedRow or InvariantViolation.
Trace read_trace(const std::string& dir_path);

/// Writes the trace as CSV with deterministic row order and byte-stable
/// formatting. Throws IoError.
void write_trace(const Trace& trace, const std::string& dir_path);

/// Canonical row ordering used by write_trace and applied by read_trace.
void normalize_order(Trace& trace);

} // namespace netqos
