#include "netqos/telemetry.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace netqos {

const std::array<std::string, kKpiCount>& kpi_names() {
    static const std::array<std::string, kKpiCount> names = {
        "prb_util_ul_rate",      "prb_util_dl_rate",       "pdcch_util_rate",
        "prach_util_rate",       "rrc_attconnestab_ue_rate", "ho_succoutintraenb_rate",
        "rrc_userconnmax",       "erab_estab_succ_rate",
    };
    return names;
}

bool kpi_is_rate(std::size_t index) {
    return index != static_cast<std::size_t>(Kpi::rrc_userconnmax);
}

namespace {

template <std::size_t N>
std::size_t lookup(const std::array<std::string, N>& names, const std::string& s,
                   const char* what) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return i;
    throw Error(std::string("unknown ") + what + ": '" + s + "'");
}

const std::array<std::string, 3> kRegionNames = {"work", "residential", "leisure"};
const std::array<std::string, 4> kServiceNames = {"web", "email", "streaming", "other"};
const std::array<std::string, 2> kPriorityNames = {"low", "high"};

} // namespace

const std::string& region_name(RegionType r) { return kRegionNames[static_cast<std::size_t>(r)]; }
RegionType region_from_name(const std::string& s) {
    return static_cast<RegionType>(lookup(kRegionNames, s, "region_type"));
}
const std::string& service_name(ServiceType s) { return kServiceNames[static_cast<std::size_t>(s)]; }
ServiceType service_from_name(const std::string& s) {
    return static_cast<ServiceType>(lookup(kServiceNames, s, "service_type"));
}
const std::string& priority_name(Priority p) { return kPriorityNames[static_cast<std::size_t>(p)]; }
Priority priority_from_name(const std::string& s) {
    return static_cast<Priority>(lookup(kPriorityNames, s, "priority"));
}

void Topology::rebuild_neighbors() {
    std::sort(cells.begin(), cells.end(),
              [](const CellInfo& a, const CellInfo& b) { return a.cell_id < b.cell_id; });
    neighbors.assign(cells.size(), {});
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::vector<std::size_t> order;
        order.reserve(cells.size() - 1);
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (j != i) order.push_back(j);
        auto dist2 = [&](std::size_t j) {
            double dx = cells[j].x_km - cells[i].x_km;
            double dy = cells[j].y_km - cells[i].y_km;
            return dx * dx + dy * dy;
        };
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double da = dist2(a), db = dist2(b);
            if (da != db) return da < db;
            return cells[a].cell_id < cells[b].cell_id;
        });
        neighbors[i] = std::move(order);
    }
}

const CellInfo* Topology::find(std::uint32_t cell_id) const {
    for (const auto& c : cells)
        if (c.cell_id == cell_id) return &c;
    return nullptr;
}

std::size_t Topology::index_of(std::uint32_t cell_id) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].cell_id == cell_id) return i;
    throw UnknownCell("cell_id " + std::to_string(cell_id) + " not in topology");
}

namespace {

std::string loc(const char* file, std::uint32_t cell, std::int64_t ts) {
    return std::string(file) + " cell " + std::to_string(cell) + " t " + std::to_string(ts);
}

} // namespace

ValidationReport validate_trace(const Trace& trace) {
    ValidationReport rep;
    auto add = [&rep](const std::string& s) { rep.violations.push_back(s); };

    // topology
    std::map<std::uint32_t, std::size_t> known;
    for (const auto& c : trace.topology.cells) {
        if (known.count(c.cell_id))
            add("topology.csv: duplicate cell_id " + std::to_string(c.cell_id));
        known[c.cell_id] = 1;
        if (!(c.capacity > 0.0))
            add("topology.csv cell " + std::to_string(c.cell_id) + ": capacity must be > 0");
    }
    auto cell_known = [&](std::uint32_t id) { return known.count(id) != 0; };

    if (trace.step_minutes <= 0 || 1440 % trace.step_minutes != 0)
        add("meta.csv: step_minutes must divide 1440");
    if (trace.start_dow < 0 || trace.start_dow > 6)
        add("meta.csv: start_dow must be in 0..6");

    // kpi frames
    std::map<std::pair<std::uint32_t, std::int64_t>, int> seen;
    std::map<std::uint32_t, std::vector<std::int64_t>> per_cell_ts;
    for (const auto& f : trace.kpi_frames) {
        if (!cell_known(f.cell_id))
            add(loc("kpi.csv", f.cell_id, f.timestamp) + ": unknown cell_id");
        auto key = std::make_pair(f.cell_id, f.timestamp);
        if (seen.count(key))
            add(loc("kpi.csv", f.cell_id, f.timestamp) + ": duplicate (cell_id, timestamp)");
        seen[key] = 1;
        per_cell_ts[f.cell_id].push_back(f.timestamp);
        for (std::size_t k = 0; k < kKpiCount; ++k) {
            double v = f.values[k];
            if (!std::isfinite(v)) {
                add(loc("kpi.csv", f.cell_id, f.timestamp) + ": " + kpi_names()[k] + " not finite");
            } else if (kpi_is_rate(k)) {
                if (v < 0.0 || v > 1.0)
                    add(loc("kpi.csv", f.cell_id, f.timestamp) + ": " + kpi_names()[k] + "=" +
                        format_real(v) + " outside [0,1]");
            } else if (v < 0.0) {
                add(loc("kpi.csv", f.cell_id, f.timestamp) + ": " + kpi_names()[k] +
                    " must be >= 0");
            }
        }
    }

    // regular grid, no gaps, identical per cell
    if (!per_cell_ts.empty()) {
        std::vector<std::int64_t> ref;
        bool first = true;
        for (auto& [cell, ts] : per_cell_ts) {
            std::sort(ts.begin(), ts.end());
            for (std::size_t i = 1; i < ts.size(); ++i) {
                if (ts[i] - ts[i - 1] != trace.step_minutes) {
                    add("kpi.csv cell " + std::to_string(cell) + ": gap in time grid at t " +
                        std::to_string(ts[i]));
                    break;
                }
            }
            if (first) {
                ref = ts;
                first = false;
            } else if (ts != ref) {
                add("kpi.csv cell " + std::to_string(cell) +
                    ": time grid differs from other cells");
            }
        }
    }

    for (const auto& q : trace.qos_samples) {
        if (!cell_known(q.cell_id))
            add(loc("qos.csv", q.cell_id, q.timestamp) + ": unknown cell_id");
        if (!(q.delay_ms > 0.0))
            add(loc("qos.csv", q.cell_id, q.timestamp) + ": delay_ms must be > 0");
        if (q.jitter_ms < 0.0)
            add(loc("qos.csv", q.cell_id, q.timestamp) + ": jitter_ms must be >= 0");
        if (q.loss_rate < 0.0 || q.loss_rate > 1.0)
            add(loc("qos.csv", q.cell_id, q.timestamp) + ": loss_rate outside [0,1]");
    }

    for (const auto& t : trace.traffic_records) {
        if (!cell_known(t.cell_id))
            add(loc("tdr.csv", t.cell_id, t.start_ts) + ": unknown cell_id");
        if (t.start_ts > t.end_ts)
            add(loc("tdr.csv", t.cell_id, t.start_ts) + ": start_ts > end_ts");
    }

    for (const auto& m : trace.measure_reports) {
        if (!cell_known(m.cell_id))
            add(loc("mr.csv", m.cell_id, m.timestamp) + ": unknown cell_id");
        if (!std::isfinite(m.sinr_db) || !std::isfinite(m.rsrq_db))
            add(loc("mr.csv", m.cell_id, m.timestamp) + ": non-finite signal value");
    }

    return rep;
}

void normalize_order(Trace& trace) {
    std::sort(trace.topology.cells.begin(), trace.topology.cells.end(),
              [](const CellInfo& a, const CellInfo& b) { return a.cell_id < b.cell_id; });
    std::stable_sort(trace.kpi_frames.begin(), trace.kpi_frames.end(),
                     [](const KpiFrame& a, const KpiFrame& b) {
                         return std::tie(a.cell_id, a.timestamp) < std::tie(b.cell_id, b.timestamp);
                     });
    std::stable_sort(trace.qos_samples.begin(), trace.qos_samples.end(),
                     [](const QosSample& a, const QosSample& b) {
                         return std::tie(a.cell_id, a.timestamp, a.user_id) <
                                std::tie(b.cell_id, b.timestamp, b.user_id);
                     });
    std::stable_sort(trace.traffic_records.begin(), trace.traffic_records.end(),
                     [](const TrafficRecord& a, const TrafficRecord& b) {
                         return std::tie(a.cell_id, a.start_ts, a.end_ts, a.user_id) <
                                std::tie(b.cell_id, b.start_ts, b.end_ts, b.user_id);
                     });
    std::stable_sort(trace.measure_reports.begin(), trace.measure_reports.end(),
                     [](const MeasureReport& a, const MeasureReport& b) {
                         return std::tie(a.cell_id, a.timestamp, a.user_id) <
                                std::tie(b.cell_id, b.timestamp, b.user_id);
                     });
}

namespace {

constexpr const char* kTopoHeader = "cell_id,x_km,y_km,region_type,capacity";
constexpr const char* kKpiHeader =
    "timestamp,cell_id,prb_util_ul_rate,prb_util_dl_rate,pdcch_util_rate,prach_util_rate,"
    "rrc_attconnestab_ue_rate,ho_succoutintraenb_rate,rrc_userconnmax,erab_estab_succ_rate";
constexpr const char* kQosHeader = "timestamp,cell_id,user_id,delay_ms,jitter_ms,loss_rate";
constexpr const char* kTdrHeader = "start_ts,end_ts,cell_id,user_id,bytes,service_type,priority";
constexpr const char* kMrHeader = "timestamp,cell_id,user_id,sinr_db,rsrq_db";
constexpr const char* kMetaHeader = "start_dow,step_minutes";

class CsvReader {
public:
    CsvReader(const std::string& path, const char* expected_header, std::size_t n_fields)
        : path_(path), n_fields_(n_fields), in_(path, std::ios::binary) {
        if (!in_) throw MissingFile(path);
        std::string header;
        if (!std::getline(in_, header)) throw MalformedRow(base(), 1, "missing header");
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != expected_header)
            throw MalformedRow(base(), 1, "bad header, expected '" + std::string(expected_header) + "'");
        line_no_ = 1;
    }

    bool next(std::vector<std::string>& fields) {
        std::string line;
        for (;;) {
            if (!std::getline(in_, line)) return false;
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) break;
        }
        fields = split_string(line, ',');
        if (fields.size() != n_fields_)
            throw MalformedRow(base(), line_no_,
                               "expected " + std::to_string(n_fields_) + " fields, got " +
                                   std::to_string(fields.size()));
        return true;
    }

    std::string base() const { return fs::path(path_).filename().string(); }
    std::size_t line() const { return line_no_; }

    double real(const std::string& s) {
        try {
            return parse_real(s);
        } catch (const std::invalid_argument& e) {
            throw MalformedRow(base(), line_no_, e.what());
        }
    }

    std::int64_t integer(const std::string& s) {
        try {
            std::size_t pos = 0;
            std::int64_t v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw MalformedRow(base(), line_no_, "bad integer: '" + s + "'");
        }
    }

    std::uint32_t u32(const std::string& s) {
        std::int64_t v = integer(s);
        if (v < 0 || v > 0xFFFFFFFFll)
            throw MalformedRow(base(), line_no_, "out of range: '" + s + "'");
        return static_cast<std::uint32_t>(v);
    }

    std::uint64_t u64(const std::string& s) {
        try {
            std::size_t pos = 0;
            std::uint64_t v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw MalformedRow(base(), line_no_, "bad unsigned: '" + s + "'");
        }
    }

private:
    std::string path_;
    std::size_t n_fields_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

} // namespace

Trace read_trace(const std::string& dir_path) {
    Trace trace;
    fs::path dir(dir_path);

    {
        CsvReader r((dir / "meta.csv").string(), kMetaHeader, 2);
        std::vector<std::string> f;
        if (!r.next(f)) throw MalformedRow("meta.csv", 2, "missing metadata row");
        trace.start_dow = static_cast<int>(r.integer(f[0]));
        trace.step_minutes = static_cast<int>(r.integer(f[1]));
    }
    {
        CsvReader r((dir / "topology.csv").string(), kTopoHeader, 5);
        std::vector<std::string> f;
        while (r.next(f)) {
            CellInfo c;
            c.cell_id = r.u32(f[0]);
            c.x_km = r.real(f[1]);
            c.y_km = r.real(f[2]);
            try {
                c.region_type = region_from_name(f[3]);
            } catch (const Error& e) {
                throw MalformedRow(r.base(), r.line(), e.what());
            }
            c.capacity = r.real(f[4]);
            trace.topology.cells.push_back(c);
        }
    }
    {
        CsvReader r((dir / "kpi.csv").string(), kKpiHeader, 2 + kKpiCount);
        std::vector<std::string> f;
        while (r.next(f)) {
            KpiFrame k;
            k.timestamp = r.integer(f[0]);
            k.cell_id = r.u32(f[1]);
            for (std::size_t i = 0; i < kKpiCount; ++i) k.values[i] = r.real(f[2 + i]);
            trace.kpi_frames.push_back(k);
        }
    }
    {
        CsvReader r((dir / "qos.csv").string(), kQosHeader, 6);
        std::vector<std::string> f;
        while (r.next(f)) {
            QosSample q;
            q.timestamp = r.integer(f[0]);
            q.cell_id = r.u32(f[1]);
            q.user_id = r.u32(f[2]);
            q.delay_ms = r.real(f[3]);
            q.jitter_ms = r.real(f[4]);
            q.loss_rate = r.real(f[5]);
            trace.qos_samples.push_back(q);
        }
    }
    {
        CsvReader r((dir / "tdr.csv").string(), kTdrHeader, 7);
        std::vector<std::string> f;
        while (r.next(f)) {
            TrafficRecord t;
            t.start_ts = r.integer(f[0]);
            t.end_ts = r.integer(f[1]);
            t.cell_id = r.u32(f[2]);
            t.user_id = r.u32(f[3]);
            t.bytes = r.u64(f[4]);
            try {
                t.service_type = service_from_name(f[5]);
                t.priority = priority_from_name(f[6]);
            } catch (const Error& e) {
                throw MalformedRow(r.base(), r.line(), e.what());
            }
            trace.traffic_records.push_back(t);
        }
    }
    {
        CsvReader r((dir / "mr.csv").string(), kMrHeader, 5);
        std::vector<std::string> f;
        while (r.next(f)) {
            MeasureReport m;
            m.timestamp = r.integer(f[0]);
            m.cell_id = r.u32(f[1]);
            m.user_id = r.u32(f[2]);
            m.sinr_db = r.real(f[3]);
            m.rsrq_db = r.real(f[4]);
            trace.measure_reports.push_back(m);
        }
    }

    trace.topology.rebuild_neighbors();
    normalize_order(trace);

    ValidationReport rep = validate_trace(trace);
    if (!rep.ok()) {
        std::string msg = rep.violations.front();
        if (rep.violations.size() > 1)
            msg += " (+" + std::to_string(rep.violations.size() - 1) + " more)";
        throw InvariantViolation(msg);
    }
    return trace;
}

void write_trace(const Trace& trace, const std::string& dir_path) {
    fs::path dir(dir_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir_path);

    Trace sorted = trace;
    normalize_order(sorted);

    std::ostringstream meta;
    meta << kMetaHeader << "\n" << sorted.start_dow << "," << sorted.step_minutes << "\n";
    write_file((dir / "meta.csv").string(), meta.str());

    std::ostringstream topo;
    topo << kTopoHeader << "\n";
    for (const auto& c : sorted.topology.cells)
        topo << c.cell_id << "," << format_real(c.x_km) << "," << format_real(c.y_km) << ","
             << region_name(c.region_type) << "," << format_real(c.capacity) << "\n";
    write_file((dir / "topology.csv").string(), topo.str());

    std::ostringstream kpi;
    kpi << kKpiHeader << "\n";
    for (const auto& f : sorted.kpi_frames) {
        kpi << f.timestamp << "," << f.cell_id;
        for (std::size_t i = 0; i < kKpiCount; ++i) kpi << "," << format_real(f.values[i]);
        kpi << "\n";
    }
    write_file((dir / "kpi.csv").string(), kpi.str());

    std::ostringstream qos;
    qos << kQosHeader << "\n";
    for (const auto& q : sorted.qos_samples)
        qos << q.timestamp << "," << q.cell_id << "," << q.user_id << ","
            << format_real(q.delay_ms) << "," << format_real(q.jitter_ms) << ","
            << format_real(q.loss_rate) << "\n";
    write_file((dir / "qos.csv").string(), qos.str());

    std::ostringstream tdr;
    tdr << kTdrHeader << "\n";
    for (const auto& t : sorted.traffic_records)
        tdr << t.start_ts << "," << t.end_ts << "," << t.cell_id << "," << t.user_id << ","
            << t.bytes << "," << service_name(t.service_type) << "," << priority_name(t.priority)
            << "\n";
    write_file((dir / "tdr.csv").string(), tdr.str());

    std::ostringstream mr;
    mr << kMrHeader << "\n";
    for (const auto& m : sorted.measure_reports)
        mr << m.timestamp << "," << m.cell_id << "," << m.user_id << "," << format_real(m.sinr_db)
           << "," << format_real(m.rsrq_db) << "\n";
    write_file((dir / "mr.csv").string(), mr.str());
}

} // namespace netqos
