#include "netqos/netsim.hpp"

#include "netqos/common.hpp"
#include "netqos/dataset.hpp"
#include "netqos/errors.hpp"
#include "netqos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace netqos {

namespace {

// RNG channel ids; streams are keyed (seed, channel, a, b).
enum Channel : std::uint64_t {
    CH_LOAD = 1,      // (cell, step): AR(1) innovation
    CH_LOAD_INIT = 2, // (cell): stationary AR start
    CH_CONN = 3,      // (request_id): duration, priority, service, user, bytes
    CH_QOS = 4,       // (request_id, step): delay/jitter/loss noise
    CH_KPI = 5,       // (cell, step): per-KPI additive noise
    CH_MR = 6,        // (request_id, step): SINR/RSRQ noise
};

constexpr int kMaxConnSteps = 16;

struct Bump {
    double center;
    double sigma;
    double amp;
};

double bumps(double minute, const Bump* b, int n) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int k = -1; k <= 1; ++k) {
            double d = (minute + 1440.0 * k - b[i].center) / b[i].sigma;
            v += b[i].amp * std::exp(-0.5 * d * d);
        }
    }
    return v;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double ramp(double rho, double from, double width) {
    return clamp01((rho - from) / width);
}

} // namespace

double region_load_profile(RegionType region, int day_of_week, int minute_of_day) {
    static const Bump kWork[] = {{630.0, 140.0, 1.0}, {930.0, 140.0, 0.85}};
    static const Bump kResidential[] = {{450.0, 120.0, 0.35}, {1250.0, 150.0, 1.0}};
    static const Bump kLeisure[] = {{780.0, 170.0, 1.0}, {1020.0, 130.0, 0.55}};

    const bool weekend = is_weekend(day_of_week);
    double shape = 0.0;
    double scale = 1.0;
    switch (region) {
        case RegionType::work:
            shape = bumps(minute_of_day, kWork, 2);
            scale = weekend ? 0.10 : 1.0;
            break;
        case RegionType::residential:
            shape = bumps(minute_of_day, kResidential, 2);
            scale = 1.0;
            break;
        case RegionType::leisure:
            shape = bumps(minute_of_day, kLeisure, 2);
            scale = weekend ? 1.0 : 0.38;
            break;
    }
    return scale * shape + 0.02;
}

double cell_delay(double utilization, const SimConfig& config) {
    double rho = std::min(std::max(utilization, 0.0), config.utilization_cap);
    return config.base_delay_ms / (1.0 - rho);
}

void SimConfig::validate() const {
    if (n_cells < 1) throw ConfigError("n_cells must be >= 1");
    if (days < 1) throw ConfigError("days must be >= 1");
    if (step_minutes <= 0 || 1440 % step_minutes != 0)
        throw ConfigError("step_minutes must divide 1440");
    if (start_dow < 0 || start_dow > 6) throw ConfigError("start_dow must be in 0..6");
    if (!(spacing_km > 0.0)) throw ConfigError("spacing_km must be > 0");
    if (region_pattern.empty()) throw ConfigError("region_pattern must be non-empty");
    if (!(capacity > 0.0)) throw ConfigError("capacity must be > 0");
    if (users_per_cell < 0.0) throw ConfigError("users_per_cell must be >= 0");
    if (!(demand_per_connection > 0.0)) throw ConfigError("demand_per_connection must be > 0");
    if (mean_connection_steps < 1.0) throw ConfigError("mean_connection_steps must be >= 1");
    if (load_noise_sigma < 0.0 || kpi_noise_sigma < 0.0 || qos_noise_sigma < 0.0 ||
        mr_noise_sigma < 0.0)
        throw ConfigError("noise sigmas must be >= 0");
    if (load_noise_phi < 0.0 || load_noise_phi >= 1.0)
        throw ConfigError("load_noise_phi must be in [0,1)");
    if (!(base_delay_ms > 0.0)) throw ConfigError("base_delay_ms must be > 0");
    if (utilization_cap <= 0.0 || utilization_cap >= 1.0)
        throw ConfigError("utilization_cap must be in (0,1)");
    if (loss_knee <= 0.0 || loss_knee >= 1.0) throw ConfigError("loss_knee must be in (0,1)");
    if (congestion_threshold <= 0.0 || congestion_threshold > utilization_cap)
        throw ConfigError("congestion_threshold must be in (0, utilization_cap]");
    if (low_priority_fraction < 0.0 || low_priority_fraction > 1.0)
        throw ConfigError("low_priority_fraction must be in [0,1]");
    double mix = 0.0;
    for (double m : service_mix) {
        if (m < 0.0) throw ConfigError("service_mix entries must be >= 0");
        mix += m;
    }
    if (!(mix > 0.0)) throw ConfigError("service_mix must have positive mass");
    std::int64_t horizon = static_cast<std::int64_t>(n_steps()) * step_minutes;
    for (const auto& e : events) {
        if (e.cell_ids.empty()) throw ConfigError("event needs at least one cell");
        if (e.start_ts >= e.end_ts) throw ConfigError("event start_ts must be < end_ts");
        if (e.start_ts < 0 || e.start_ts >= horizon)
            throw ConfigError("event start_ts outside trace window");
        if (!(e.load_multiplier > 1.0)) throw ConfigError("event multiplier must be > 1");
        for (auto c : e.cell_ids)
            if (c >= n_cells) throw ConfigError("event cell_id out of range");
    }
}

RegionType SimConfig::region_of(std::uint32_t cell_index) const {
    return region_pattern[cell_index % region_pattern.size()];
}

Topology SimConfig::build_topology() const {
    Topology topo;
    std::uint32_t cols = static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(n_cells))));
    for (std::uint32_t i = 0; i < n_cells; ++i) {
        CellInfo c;
        c.cell_id = i;
        c.x_km = quantize6(static_cast<double>(i % cols) * spacing_km);
        c.y_km = quantize6(static_cast<double>(i / cols) * spacing_km);
        c.region_type = region_of(i);
        c.capacity = capacity;
        topo.cells.push_back(c);
    }
    topo.rebuild_neighbors();
    return topo;
}

SimConfig SimConfig::from_kv(const KvConfig& kv) {
    SimConfig c;
    c.n_cells = static_cast<std::uint32_t>(kv.get_int("topology", "n_cells", c.n_cells));
    c.spacing_km = kv.get_real("topology", "spacing_km", c.spacing_km);
    if (kv.has("topology", "region_pattern")) {
        c.region_pattern.clear();
        for (const auto& name : split_string(kv.get_string("topology", "region_pattern"), ','))
            c.region_pattern.push_back(region_from_name(trim(name)));
    }
    c.capacity = kv.get_real("topology", "capacity", c.capacity);

    c.days = static_cast<std::uint32_t>(kv.get_int("time", "days", c.days));
    c.step_minutes = static_cast<int>(kv.get_int("time", "step_minutes", c.step_minutes));
    c.start_dow = static_cast<int>(kv.get_int("time", "start_dow", c.start_dow));

    c.users_per_cell = kv.get_real("load", "users_per_cell", c.users_per_cell);
    c.demand_per_connection = kv.get_real("load", "demand_per_connection", c.demand_per_connection);
    c.mean_connection_steps = kv.get_real("load", "mean_connection_steps", c.mean_connection_steps);
    c.load_noise_sigma = kv.get_real("load", "noise_sigma", c.load_noise_sigma);
    c.load_noise_phi = kv.get_real("load", "noise_phi", c.load_noise_phi);

    c.base_delay_ms = kv.get_real("congestion", "base_delay_ms", c.base_delay_ms);
    c.utilization_cap = kv.get_real("congestion", "utilization_cap", c.utilization_cap);
    c.loss_knee = kv.get_real("congestion", "loss_knee", c.loss_knee);
    c.congestion_threshold =
        kv.get_real("congestion", "congestion_threshold", c.congestion_threshold);

    c.kpi_noise_sigma = kv.get_real("noise", "kpi_sigma", c.kpi_noise_sigma);
    c.qos_noise_sigma = kv.get_real("noise", "qos_sigma", c.qos_noise_sigma);
    c.mr_noise_sigma = kv.get_real("noise", "mr_sigma", c.mr_noise_sigma);

    c.low_priority_fraction =
        kv.get_real("traffic", "low_priority_fraction", c.low_priority_fraction);
    if (kv.has("traffic", "service_mix")) {
        auto parts = split_string(kv.get_string("traffic", "service_mix"), ',');
        std::array<double, 4> mix{};
        for (const auto& part : parts) {
            auto kvp = split_string(trim(part), ':');
            if (kvp.size() != 2) throw ConfigError("service_mix entries must be name:weight");
            mix[static_cast<std::size_t>(service_from_name(trim(kvp[0])))] =
                parse_real(trim(kvp[1]));
        }
        c.service_mix = mix;
    }

    for (const auto& spec : kv.get_all("events", "event")) {
        Event e;
        for (const auto& part : split_string(spec, ';')) {
            auto kvp = split_string(trim(part), ':');
            if (kvp.size() != 2) throw ConfigError("event fields must be key:value; got '" + part + "'");
            const std::string key = trim(kvp[0]);
            const std::string val = trim(kvp[1]);
            if (key == "cells") {
                for (const auto& id : split_string(val, ','))
                    e.cell_ids.push_back(static_cast<std::uint32_t>(std::stoul(trim(id))));
            } else if (key == "start") {
                e.start_ts = std::stoll(val);
            } else if (key == "end") {
                e.end_ts = std::stoll(val);
            } else if (key == "mult") {
                e.load_multiplier = parse_real(val);
            } else {
                throw ConfigError("unknown event field '" + key + "'");
            }
        }
        c.events.push_back(std::move(e));
    }

    c.seed = kv.get_u64("rng", "seed", c.seed);
    c.validate();
    return c;
}

SimConfig SimConfig::from_file(const std::string& path) {
    KvConfig kv = KvConfig::parse_file(path);
    SimConfig c = from_kv(kv);
    kv.reject_unconsumed();
    return c;
}

std::string SimConfig::to_text() const {
    std::ostringstream os;
    os << "[topology]\n";
    os << "n_cells = " << n_cells << "\n";
    os << "spacing_km = " << format_real(spacing_km) << "\n";
    os << "region_pattern = ";
    for (std::size_t i = 0; i < region_pattern.size(); ++i)
        os << (i ? "," : "") << region_name(region_pattern[i]);
    os << "\n";
    os << "capacity = " << format_real(capacity) << "\n";
    os << "[time]\n";
    os << "days = " << days << "\n";
    os << "step_minutes = " << step_minutes << "\n";
    os << "start_dow = " << start_dow << "\n";
    os << "[load]\n";
    os << "users_per_cell = " << format_real(users_per_cell) << "\n";
    os << "demand_per_connection = " << format_real(demand_per_connection) << "\n";
    os << "mean_connection_steps = " << format_real(mean_connection_steps) << "\n";
    os << "noise_sigma = " << format_real(load_noise_sigma) << "\n";
    os << "noise_phi = " << format_real(load_noise_phi) << "\n";
    os << "[congestion]\n";
    os << "base_delay_ms = " << format_real(base_delay_ms) << "\n";
    os << "utilization_cap = " << format_real(utilization_cap) << "\n";
    os << "loss_knee = " << format_real(loss_knee) << "\n";
    os << "congestion_threshold = " << format_real(congestion_threshold) << "\n";
    os << "[noise]\n";
    os << "kpi_sigma = " << format_real(kpi_noise_sigma) << "\n";
    os << "qos_sigma = " << format_real(qos_noise_sigma) << "\n";
    os << "mr_sigma = " << format_real(mr_noise_sigma) << "\n";
    os << "[traffic]\n";
    os << "low_priority_fraction = " << format_real(low_priority_fraction) << "\n";
    os << "service_mix = web:" << format_real(service_mix[0]) << ",email:"
       << format_real(service_mix[1]) << ",streaming:" << format_real(service_mix[2])
       << ",other:" << format_real(service_mix[3]) << "\n";
    if (!events.empty()) {
        os << "[events]\n";
        for (const auto& e : events) {
            os << "event = cells:";
            for (std::size_t i = 0; i < e.cell_ids.size(); ++i)
                os << (i ? "," : "") << e.cell_ids[i];
            os << ";start:" << e.start_ts << ";end:" << e.end_ts << ";mult:"
               << format_real(e.load_multiplier) << "\n";
        }
    }
    os << "[rng]\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

namespace {

struct ActiveConn {
    std::uint64_t request_id = 0;
    std::uint32_t user_id = 0;
    std::size_t last_step = 0; // inclusive
};

struct CellRun {
    double ar_log = 0.0;
    int nat_active = 0;
    int adm_active = 0;
    std::vector<int> nat_expiry;
    std::vector<int> adm_expiry;
    std::vector<ActiveConn> active; // admitted, ascending request_id

    std::vector<KpiFrame> kpis;
    std::vector<QosSample> qos;
    std::vector<TrafficRecord> tdrs;
    std::vector<MeasureReport> mrs;
};

} // namespace

SimOutput simulate(const SimConfig& config, const AdmissionFn& admission,
                   const StepObserver& observer, int threads) {
    config.validate();

    const std::size_t n_cells = config.n_cells;
    const std::size_t n_steps = config.n_steps();
    const int step = config.step_minutes;
    const double sigma = config.load_noise_sigma;
    const double phi = config.load_noise_phi;
    const double innov = sigma * std::sqrt(1.0 - phi * phi);
    const double geo_p = 1.0 / config.mean_connection_steps;

    double mix_total = 0.0;
    for (double m : config.service_mix) mix_total += m;

    SimOutput out;
    out.trace.topology = config.build_topology();
    out.trace.start_dow = config.start_dow;
    out.trace.step_minutes = step;
    out.gt.cell_ids.resize(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) out.gt.cell_ids[c] = out.trace.topology.cells[c].cell_id;
    out.gt.timestamps.resize(n_steps);
    for (std::size_t s = 0; s < n_steps; ++s)
        out.gt.timestamps[s] = static_cast<std::int64_t>(s) * step;
    out.gt.rows.assign(n_cells * n_steps, {});
    out.per_cell_step.assign(n_cells * n_steps, {});

    std::vector<CellRun> cells(n_cells);
    for (auto& cr : cells) {
        cr.nat_expiry.assign(n_steps + kMaxConnSteps + 1, 0);
        cr.adm_expiry.assign(n_steps + kMaxConnSteps + 1, 0);
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        KeyedRng rng(config.seed, CH_LOAD_INIT, c);
        cells[c].ar_log = sigma * rng.normal();
    }

    std::vector<std::vector<std::array<double, kKpiCount>>> kpi_history(n_cells);
    for (auto& h : kpi_history) h.reserve(n_steps);

    const std::int64_t last_ts = static_cast<std::int64_t>(n_steps - 1) * step;

    for (std::size_t s = 0; s < n_steps; ++s) {
        const std::int64_t ts = static_cast<std::int64_t>(s) * step;
        const int dow = static_cast<int>((config.start_dow + ts / 1440) % 7);
        const int mod = static_cast<int>(ts % 1440);

        parallel_for(n_cells, threads, [&](std::size_t c) {
            CellRun& cr = cells[c];
            const RegionType region = config.region_of(static_cast<std::uint32_t>(c));
            const std::uint32_t cell_id = out.trace.topology.cells[c].cell_id;

            cr.nat_active -= cr.nat_expiry[s];
            cr.adm_active -= cr.adm_expiry[s];
            std::erase_if(cr.active, [&](const ActiveConn& a) { return a.last_step < s; });

            // AR(1) lognormal load factor, mean one
            {
                KeyedRng rng(config.seed, CH_LOAD, c, s);
                cr.ar_log = phi * cr.ar_log + innov * rng.normal();
            }
            double event_mult = 1.0;
            for (const auto& e : config.events) {
                if (ts >= e.start_ts && ts < e.end_ts &&
                    std::find(e.cell_ids.begin(), e.cell_ids.end(), cell_id) != e.cell_ids.end())
                    event_mult *= e.load_multiplier;
            }
            const double profile = region_load_profile(region, dow, mod);
            const double noise = std::exp(cr.ar_log - 0.5 * sigma * sigma);
            const double target = config.users_per_cell * profile * event_mult * noise;

            long arrivals = std::max(0l, std::lround(target - cr.nat_active));
            StepCellStats& stats = out.per_cell_step[c * n_steps + s];
            stats.offered_requests = static_cast<std::uint32_t>(arrivals);

            for (long a = 0; a < arrivals; ++a) {
                const std::uint64_t request_id =
                    (static_cast<std::uint64_t>(c) << 40) | (static_cast<std::uint64_t>(s) << 16) |
                    static_cast<std::uint64_t>(a);
                KeyedRng rng(config.seed, CH_CONN, request_id);

                int duration = 1;
                if (geo_p < 1.0)
                    duration = 1 + static_cast<int>(std::log(rng.uniform_open()) /
                                                    std::log(1.0 - geo_p));
                else
                    rng.next_u64();
                duration = std::min(duration, kMaxConnSteps);

                const Priority prio =
                    rng.bernoulli(config.low_priority_fraction) ? Priority::low : Priority::high;

                double pick = rng.uniform() * mix_total;
                std::size_t svc = 0;
                for (; svc + 1 < config.service_mix.size(); ++svc) {
                    if (pick < config.service_mix[svc]) break;
                    pick -= config.service_mix[svc];
                }
                const ServiceType service = static_cast<ServiceType>(svc);

                const std::uint32_t pool =
                    std::max<std::uint32_t>(1, static_cast<std::uint32_t>(config.users_per_cell * 5.0));
                const std::uint32_t user_id =
                    cell_id * 10000u + static_cast<std::uint32_t>(rng.below(pool));

                cr.nat_active += 1;
                cr.nat_expiry[s + static_cast<std::size_t>(duration)] += 1;

                ArrivalRequest req;
                req.cell_id = cell_id;
                req.timestamp = ts;
                req.request_id = request_id;
                req.priority = prio;
                req.service = service;
                req.user_id = user_id;
                req.duration_steps = duration;

                const bool admit = admission ? admission(req) : true;
                if (!admit) {
                    if (prio == Priority::low)
                        stats.rejected_low += 1;
                    else
                        stats.rejected_high += 1;
                    continue;
                }
                stats.admitted += 1;

                const std::size_t last_step = std::min(s + static_cast<std::size_t>(duration) - 1,
                                                       n_steps - 1);
                cr.adm_active += 1;
                cr.adm_expiry[s + static_cast<std::size_t>(duration)] += 1;
                cr.active.push_back({request_id, user_id, last_step});

                static const double kServiceByteFactor[4] = {1.0, 0.3, 3.0, 0.6};
                const double minutes = static_cast<double>(duration) * step;
                const double bytes_f = config.demand_per_connection * minutes * 1000.0 *
                                       kServiceByteFactor[svc] * rng.lognormal_unit(0.5);
                TrafficRecord tdr;
                tdr.start_ts = ts;
                tdr.end_ts = std::min(ts + static_cast<std::int64_t>(duration - 1) * step, last_ts);
                tdr.cell_id = cell_id;
                tdr.user_id = user_id;
                tdr.bytes = static_cast<std::uint64_t>(std::llround(std::max(0.0, bytes_f)));
                tdr.service_type = service;
                tdr.priority = prio;
                cr.tdrs.push_back(tdr);
            }

            const double offered = cr.adm_active * config.demand_per_connection;
            const double rho = std::min(offered / config.capacity, config.utilization_cap);
            GroundTruthRow& gtr = out.gt.rows[c * n_steps + s];
            gtr.offered_load = quantize6(offered);
            gtr.utilization = quantize6(rho);
            gtr.congested = rho >= config.congestion_threshold;

            // KPI emission: noisy monotone functions of utilization. prb/pdcch
            // laws are affine in rho so correlation with load is exact when
            // noise is zero.
            KeyedRng krng(config.seed, CH_KPI, c, s);
            auto rate = [&](double v) {
                double noisy = v + config.kpi_noise_sigma * krng.normal();
                return clamp01(quantize6(clamp01(noisy)));
            };
            KpiFrame frame;
            frame.cell_id = cell_id;
            frame.timestamp = ts;
            frame.values[static_cast<std::size_t>(Kpi::prb_util_ul_rate)] = rate(0.06 + 0.85 * rho);
            frame.values[static_cast<std::size_t>(Kpi::prb_util_dl_rate)] = rate(rho);
            frame.values[static_cast<std::size_t>(Kpi::pdcch_util_rate)] = rate(0.05 + 0.80 * rho);
            frame.values[static_cast<std::size_t>(Kpi::prach_util_rate)] =
                rate(0.02 + 0.90 * rho * rho);
            frame.values[static_cast<std::size_t>(Kpi::rrc_attconnestab_ue_rate)] =
                rate(0.999 - 0.35 * ramp(rho, 0.60, 0.40) * ramp(rho, 0.60, 0.40));
            frame.values[static_cast<std::size_t>(Kpi::ho_succoutintraenb_rate)] =
                rate(0.995 - 0.30 * ramp(rho, 0.65, 0.35) * ramp(rho, 0.65, 0.35));
            frame.values[static_cast<std::size_t>(Kpi::rrc_userconnmax)] =
                static_cast<double>(cr.adm_active);
            frame.values[static_cast<std::size_t>(Kpi::erab_estab_succ_rate)] =
                rate(0.998 - 0.40 * ramp(rho, 0.70, 0.30) * ramp(rho, 0.70, 0.30));
            cr.kpis.push_back(frame);
            kpi_history[c].push_back(frame.values);

            // Per-connection QoS and MR
            const double delay0 = cell_delay(rho, config);
            const double knee = ramp(rho, config.loss_knee, 1.0 - config.loss_knee);
            for (const auto& conn : cr.active) {
                KeyedRng qrng(config.seed, CH_QOS, conn.request_id, s);
                QosSample q;
                q.timestamp = ts;
                q.cell_id = cell_id;
                q.user_id = conn.user_id;
                q.delay_ms = quantize6(delay0 * qrng.lognormal_unit(config.qos_noise_sigma));
                if (q.delay_ms <= 0.0) q.delay_ms = 0.000001;
                q.jitter_ms = quantize6(delay0 * (0.05 + 0.45 * knee * knee) *
                                        qrng.lognormal_unit(config.qos_noise_sigma));
                double loss = 0.002 + 0.35 * knee * knee +
                              0.01 * config.qos_noise_sigma * qrng.normal();
                q.loss_rate = clamp01(quantize6(clamp01(loss)));
                cr.qos.push_back(q);
                stats.qos_samples += 1;
                stats.delay_sum_ms += q.delay_ms;

                KeyedRng mrng(config.seed, CH_MR, conn.request_id, s);
                MeasureReport mr;
                mr.timestamp = ts;
                mr.cell_id = cell_id;
                mr.user_id = conn.user_id;
                mr.sinr_db = quantize6(18.0 - 12.0 * rho + config.mr_noise_sigma * mrng.normal());
                mr.rsrq_db = quantize6(-8.0 - 8.0 * rho + 0.5 * config.mr_noise_sigma * mrng.normal());
                cr.mrs.push_back(mr);
            }
        });

        if (observer) {
            LiveState state;
            state.topology = &out.trace.topology;
            state.timestamp = ts;
            state.step_index = s;
            state.kpi_history = &kpi_history;
            observer(state);
        }
    }

    for (auto& cr : cells) {
        out.trace.kpi_frames.insert(out.trace.kpi_frames.end(), cr.kpis.begin(), cr.kpis.end());
        out.trace.qos_samples.insert(out.trace.qos_samples.end(), cr.qos.begin(), cr.qos.end());
        out.trace.traffic_records.insert(out.trace.traffic_records.end(), cr.tdrs.begin(),
                                         cr.tdrs.end());
        out.trace.measure_reports.insert(out.trace.measure_reports.end(), cr.mrs.begin(),
                                         cr.mrs.end());
    }
    normalize_order(out.trace);
    return out;
}

void write_ground_truth(const GroundTruth& gt, const std::string& path) {
    std::ostringstream os;
    os << "timestamp,cell_id,offered_load,utilization,congested\n";
    const std::size_t n_steps = gt.timestamps.size();
    for (std::size_t c = 0; c < gt.cell_ids.size(); ++c) {
        for (std::size_t s = 0; s < n_steps; ++s) {
            const auto& r = gt.rows[c * n_steps + s];
            os << gt.timestamps[s] << "," << gt.cell_ids[c] << "," << format_real(r.offered_load)
               << "," << format_real(r.utilization) << "," << (r.congested ? 1 : 0) << "\n";
        }
    }
    write_text_file(path, os.str());
}

GroundTruth read_ground_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    std::string line;
    if (!std::getline(in, line)) throw MalformedRow(path, 1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,cell_id,offered_load,utilization,congested")
        throw MalformedRow(path, 1, "bad header");

    struct Row {
        std::int64_t ts;
        std::uint32_t cell;
        GroundTruthRow data;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_string(line, ',');
        if (f.size() != 5) throw MalformedRow(path, line_no, "expected 5 fields");
        Row r;
        r.ts = std::stoll(f[0]);
        r.cell = static_cast<std::uint32_t>(std::stoul(f[1]));
        r.data.offered_load = parse_real(f[2]);
        r.data.utilization = parse_real(f[3]);
        r.data.congested = f[4] == "1";
        rows.push_back(r);
    }

    GroundTruth gt;
    for (const auto& r : rows) {
        if (gt.timestamps.empty() || gt.timestamps.back() < r.ts) {
            if (std::find(gt.timestamps.begin(), gt.timestamps.end(), r.ts) == gt.timestamps.end())
                gt.timestamps.push_back(r.ts);
        }
        if (std::find(gt.cell_ids.begin(), gt.cell_ids.end(), r.cell) == gt.cell_ids.end())
            gt.cell_ids.push_back(r.cell);
    }
    std::sort(gt.timestamps.begin(), gt.timestamps.end());
    std::sort(gt.cell_ids.begin(), gt.cell_ids.end());
    gt.rows.assign(gt.cell_ids.size() * gt.timestamps.size(), {});
    for (const auto& r : rows) {
        auto ct = std::lower_bound(gt.cell_ids.begin(), gt.cell_ids.end(), r.cell);
        auto tt = std::lower_bound(gt.timestamps.begin(), gt.timestamps.end(), r.ts);
        std::size_t c = static_cast<std::size_t>(ct - gt.cell_ids.begin());
        std::size_t s = static_cast<std::size_t>(tt - gt.timestamps.begin());
        gt.rows[c * gt.timestamps.size() + s] = r.data;
    }
    return gt;
}

double oracle_bayes_accuracy(const Trace& trace, const GroundTruth& gt,
                             const SimConfig& sim_config, const DatasetConfig& ds_config) {
    const auto anchors = enumerate_anchors(trace, ds_config);
    if (anchors.empty()) throw EmptyInput("no labelable anchors in trace");

    const std::size_t n_steps = gt.timestamps.size();
    const std::int64_t t0 = gt.timestamps.empty() ? 0 : gt.timestamps.front();
    const int step = trace.step_minutes;

    auto cell_index = [&](std::uint32_t cell_id) {
        auto it = std::lower_bound(gt.cell_ids.begin(), gt.cell_ids.end(), cell_id);
        if (it == gt.cell_ids.end() || *it != cell_id)
            throw UnknownCell("cell_id " + std::to_string(cell_id) + " not in ground truth");
        return static_cast<std::size_t>(it - gt.cell_ids.begin());
    };

    // Clairvoyant rule: weighted mean of the noise-free per-step delay (weights
    // are realized offered load, i.e. sample counts) over the same windows the
    // labeler uses, compared against the same deadband.
    std::size_t matches = 0;
    for (const auto& [cell_id, t] : anchors) {
        const std::size_t c = cell_index(cell_id);
        const std::size_t s_anchor = static_cast<std::size_t>((t - t0) / step);

        auto window_mean = [&](std::size_t begin, std::size_t end, double& mean) {
            double wsum = 0.0, dsum = 0.0;
            for (std::size_t s = begin; s < end && s < n_steps; ++s) {
                const auto& r = gt.rows[c * n_steps + s];
                if (r.offered_load <= 0.0) continue;
                const double d = quantize6(cell_delay(r.utilization, sim_config));
                wsum += r.offered_load;
                dsum += r.offered_load * d;
            }
            if (wsum <= 0.0) return false;
            mean = dsum / wsum;
            return true;
        };

        const std::size_t h = static_cast<std::size_t>(ds_config.horizon);
        double before = 0.0, after = 0.0;
        if (!window_mean(s_anchor - h, s_anchor, before) ||
            !window_mean(s_anchor, s_anchor + h, after))
            continue; // no mass; labeler would have skipped too

        const Label predicted = after > before * (1.0 + ds_config.deadband)
                                    ? Label::deterioration
                                    : Label::improvement;
        const Label actual = make_label(trace, cell_id, t, ds_config);
        if (predicted == actual) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(anchors.size());
}

} // namespace netqos
