#include "netqos/dataset.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"
#include "netqos/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace netqos {

namespace {

constexpr std::uint64_t CH_SPLIT = 100; // rng channel for the example shuffle

void check_ratio(double r, const char* name) {
    if (r < 0.0 || r > 1.0) throw ConfigError(std::string(name) + " must be in [0,1]");
}

} // namespace

void DatasetConfig::validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (neighbors < 0) throw ConfigError("neighbors must be >= 0");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (deadband < 0.0) throw ConfigError("deadband must be >= 0");
    check_ratio(train_ratio, "train_ratio");
    check_ratio(test_ratio, "test_ratio");
    check_ratio(validation_ratio, "validation_ratio");
    if (!(train_ratio > 0.0)) throw ConfigError("train_ratio must be > 0");
    if (std::abs(train_ratio + test_ratio + validation_ratio - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
}

DatasetConfig DatasetConfig::from_kv(const KvConfig& kv) {
    DatasetConfig c;
    c.window = static_cast<int>(kv.get_int("dataset", "window", c.window));
    c.neighbors = static_cast<int>(kv.get_int("dataset", "neighbors", c.neighbors));
    c.horizon = static_cast<int>(kv.get_int("dataset", "horizon", c.horizon));
    c.deadband = kv.get_real("dataset", "deadband", c.deadband);
    c.train_ratio = kv.get_real("dataset", "train_ratio", c.train_ratio);
    c.test_ratio = kv.get_real("dataset", "test_ratio", c.test_ratio);
    c.validation_ratio = kv.get_real("dataset", "validation_ratio", c.validation_ratio);
    c.split_seed = kv.get_u64("dataset", "split_seed", c.split_seed);
    c.tdr_channels = kv.get_bool("dataset", "tdr_channels", c.tdr_channels);
    c.chronological_split = kv.get_bool("dataset", "chronological_split", c.chronological_split);
    c.validate();
    return c;
}

DatasetConfig DatasetConfig::from_file(const std::string& path) {
    KvConfig kv = KvConfig::parse_file(path);
    DatasetConfig c = from_kv(kv);
    kv.reject_unconsumed();
    return c;
}

std::string DatasetConfig::to_text() const {
    std::ostringstream os;
    os << "[dataset]\n";
    os << "window = " << window << "\n";
    os << "neighbors = " << neighbors << "\n";
    os << "horizon = " << horizon << "\n";
    os << "deadband = " << format_real(deadband) << "\n";
    os << "train_ratio = " << format_real(train_ratio) << "\n";
    os << "test_ratio = " << format_real(test_ratio) << "\n";
    os << "validation_ratio = " << format_real(validation_ratio) << "\n";
    os << "split_seed = " << split_seed << "\n";
    os << "tdr_channels = " << (tdr_channels ? "true" : "false") << "\n";
    os << "chronological_split = " << (chronological_split ? "true" : "false") << "\n";
    return os.str();
}

ClassBalance class_balance(const std::vector<LabeledExample>& examples) {
    ClassBalance b;
    for (const auto& e : examples) {
        if (e.label == Label::deterioration)
            ++b.deterioration;
        else
            ++b.improvement;
    }
    return b;
}

namespace {

// Regular-grid view over a validated trace. Frame (cell i, step s) sits at
// kpi_frames[i * n_steps + s] because row order is canonical and the grid is
// identical across cells.
struct GridView {
    const Trace* trace = nullptr;
    std::int64_t t0 = 0;
    int step = 1;
    std::size_t n_steps = 0;

    // Per (cell, step) TDR aggregates; filled only when tdr_channels is set.
    std::vector<float> tdr_count;
    std::vector<float> tdr_log_bytes;

    explicit GridView(const Trace& tr, bool with_tdr) : trace(&tr) {
        const std::size_t n_cells = tr.topology.cells.size();
        if (n_cells == 0 || tr.kpi_frames.empty()) throw EmptyInput("trace has no KPI frames");
        if (tr.kpi_frames.size() % n_cells != 0)
            throw InvariantViolation("KPI frame count not divisible by cell count");
        n_steps = tr.kpi_frames.size() / n_cells;
        t0 = tr.kpi_frames.front().timestamp;
        step = tr.step_minutes;
        if (with_tdr) {
            tdr_count.assign(n_cells * n_steps, 0.0f);
            std::vector<double> bytes(n_cells * n_steps, 0.0);
            for (const auto& r : tr.traffic_records) {
                std::size_t ci = tr.topology.index_of(r.cell_id);
                std::int64_t s0 = (r.start_ts - t0) / step;
                std::int64_t s1 = (r.end_ts - t0) / step;
                s0 = std::max<std::int64_t>(s0, 0);
                s1 = std::min<std::int64_t>(s1, static_cast<std::int64_t>(n_steps) - 1);
                for (std::int64_t s = s0; s <= s1; ++s) {
                    tdr_count[ci * n_steps + static_cast<std::size_t>(s)] += 1.0f;
                    bytes[ci * n_steps + static_cast<std::size_t>(s)] +=
                        static_cast<double>(r.bytes);
                }
            }
            tdr_log_bytes.resize(bytes.size());
            for (std::size_t i = 0; i < bytes.size(); ++i)
                tdr_log_bytes[i] = static_cast<float>(std::log1p(bytes[i]));
        }
    }

    std::size_t step_of(std::int64_t t) const {
        std::int64_t d = t - t0;
        if (d < 0 || d % step != 0 || d / step >= static_cast<std::int64_t>(n_steps))
            throw InsufficientHistory("timestamp " + std::to_string(t) + " not on the trace grid");
        return static_cast<std::size_t>(d / step);
    }

    const KpiFrame& frame(std::size_t cell_index, std::size_t s) const {
        return trace->kpi_frames[cell_index * n_steps + s];
    }
};

StateTensor build_tensor_on(const GridView& grid, std::uint32_t cell_id, std::int64_t t,
                            const DatasetConfig& config) {
    const Trace& trace = *grid.trace;
    const std::size_t self = trace.topology.index_of(cell_id);
    const std::size_t s_anchor = grid.step_of(t);
    const std::size_t w = static_cast<std::size_t>(config.window);
    if (s_anchor + 1 < w)
        throw InsufficientHistory("anchor at step " + std::to_string(s_anchor) + " needs " +
                                  std::to_string(w) + " history steps");

    StateTensor tensor;
    tensor.channels = config.n_channels();
    tensor.window = w;
    tensor.cells = config.n_cell_slots();
    tensor.values.assign(tensor.channels * tensor.window * tensor.cells, 0.0f);
    tensor.cell_mask.assign(tensor.cells, 0);

    std::vector<std::size_t> slots;
    slots.push_back(self);
    const auto& nb = trace.topology.neighbors[self];
    for (std::size_t i = 0; i < nb.size() && slots.size() < tensor.cells; ++i)
        slots.push_back(nb[i]);

    for (std::size_t c = 0; c < slots.size(); ++c) tensor.cell_mask[c] = 1;

    const std::size_t s_first = s_anchor + 1 - w; // oldest step in the window
    for (std::size_t c = 0; c < slots.size(); ++c) {
        for (std::size_t wi = 0; wi < w; ++wi) {
            const std::size_t s = s_first + wi;
            const KpiFrame& f = grid.frame(slots[c], s);
            for (std::size_t k = 0; k < kKpiCount; ++k)
                tensor.at(k, wi, c) = static_cast<float>(f.values[k]);
            if (config.tdr_channels) {
                tensor.at(kKpiCount, wi, c) = grid.tdr_count[slots[c] * grid.n_steps + s];
                tensor.at(kKpiCount + 1, wi, c) =
                    grid.tdr_log_bytes[slots[c] * grid.n_steps + s];
            }
        }
    }
    return tensor;
}

struct QosWindow {
    std::size_t count = 0;
    double delay_sum = 0.0;
};

QosWindow qos_window(const Trace& trace, std::uint32_t cell_id, std::int64_t lo, std::int64_t hi) {
    auto cmp = [](const QosSample& s, std::pair<std::uint32_t, std::int64_t> key) {
        if (s.cell_id != key.first) return s.cell_id < key.first;
        return s.timestamp < key.second;
    };
    auto begin = std::lower_bound(trace.qos_samples.begin(), trace.qos_samples.end(),
                                  std::make_pair(cell_id, lo), cmp);
    auto end = std::lower_bound(trace.qos_samples.begin(), trace.qos_samples.end(),
                                std::make_pair(cell_id, hi), cmp);
    QosWindow w;
    for (auto it = begin; it != end; ++it) {
        w.count += 1;
        w.delay_sum += it->delay_ms;
    }
    return w;
}

} // namespace

StateTensor build_tensor(const Trace& trace, std::uint32_t cell_id, std::int64_t t,
                         const DatasetConfig& config) {
    config.validate();
    GridView grid(trace, config.tdr_channels);
    return build_tensor_on(grid, cell_id, t, config);
}

Label make_label(const Trace& trace, std::uint32_t cell_id, std::int64_t t,
                 const DatasetConfig& config) {
    const std::int64_t span = static_cast<std::int64_t>(config.horizon) * trace.step_minutes;
    QosWindow before = qos_window(trace, cell_id, t - span, t);
    QosWindow after = qos_window(trace, cell_id, t, t + span);
    if (before.count == 0 || after.count == 0)
        throw NoQosSamples("cell " + std::to_string(cell_id) + " around t=" + std::to_string(t) +
                           " has an empty label window");
    const double mean_before = before.delay_sum / static_cast<double>(before.count);
    const double mean_after = after.delay_sum / static_cast<double>(after.count);
    return mean_after > mean_before * (1.0 + config.deadband) ? Label::deterioration
                                                              : Label::improvement;
}

std::vector<std::pair<std::uint32_t, std::int64_t>> enumerate_anchors(const Trace& trace,
                                                                      const DatasetConfig& config) {
    config.validate();
    GridView grid(trace, false);
    const std::size_t lo =
        static_cast<std::size_t>(std::max(config.window, config.horizon));
    const std::size_t h = static_cast<std::size_t>(config.horizon);
    std::vector<std::pair<std::uint32_t, std::int64_t>> anchors;
    if (grid.n_steps < lo + h + 1) return anchors;
    const std::size_t hi = grid.n_steps - 1 - h; // inclusive
    const std::int64_t span = static_cast<std::int64_t>(config.horizon) * trace.step_minutes;
    for (const auto& cell : trace.topology.cells) {
        for (std::size_t s = lo; s <= hi; ++s) {
            const std::int64_t t = grid.t0 + static_cast<std::int64_t>(s) * grid.step;
            if (qos_window(trace, cell.cell_id, t - span, t).count == 0) continue;
            if (qos_window(trace, cell.cell_id, t, t + span).count == 0) continue;
            anchors.emplace_back(cell.cell_id, t);
        }
    }
    return anchors;
}

ChannelStats standardize_fit(const std::vector<LabeledExample>& examples) {
    if (examples.empty()) throw EmptyInput("cannot fit channel stats on zero examples");
    const std::size_t k = examples.front().tensor.channels;
    ChannelStats stats;
    stats.mean.assign(k, 0.0);
    stats.stddev.assign(k, 0.0);
    stats.constant.assign(k, 0);

    std::vector<double> sum(k, 0.0), sumsq(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (const auto& e : examples) {
        const StateTensor& t = e.tensor;
        for (std::size_t ki = 0; ki < k; ++ki) {
            for (std::size_t w = 0; w < t.window; ++w) {
                for (std::size_t c = 0; c < t.cells; ++c) {
                    if (!t.cell_mask[c]) continue;
                    const double v = t.at(ki, w, c);
                    sum[ki] += v;
                    sumsq[ki] += v * v;
                    count[ki] += 1;
                }
            }
        }
    }
    for (std::size_t ki = 0; ki < k; ++ki) {
        if (count[ki] == 0) {
            stats.constant[ki] = 1;
            continue;
        }
        const double n = static_cast<double>(count[ki]);
        const double mean = sum[ki] / n;
        double var = sumsq[ki] / n - mean * mean;
        if (var < 0.0) var = 0.0;
        stats.mean[ki] = mean;
        stats.stddev[ki] = std::sqrt(var);
        if (stats.stddev[ki] < 1e-12) stats.constant[ki] = 1;
    }
    return stats;
}

void standardize_apply(StateTensor& tensor, const ChannelStats& stats) {
    if (stats.mean.size() != tensor.channels)
        throw ShapeMismatch("channel stats cover " + std::to_string(stats.mean.size()) +
                            " channels, tensor has " + std::to_string(tensor.channels));
    for (std::size_t k = 0; k < tensor.channels; ++k) {
        if (stats.constant[k]) continue;
        const float mean = static_cast<float>(stats.mean[k]);
        const float inv = static_cast<float>(1.0 / stats.stddev[k]);
        for (std::size_t w = 0; w < tensor.window; ++w) {
            for (std::size_t c = 0; c < tensor.cells; ++c) {
                if (!tensor.cell_mask[c]) continue;
                tensor.at(k, w, c) = (tensor.at(k, w, c) - mean) * inv;
            }
        }
    }
}

void standardize_apply(std::vector<LabeledExample>& examples, const ChannelStats& stats) {
    for (auto& e : examples) standardize_apply(e.tensor, stats);
}

SplitDataset split_examples(std::vector<LabeledExample> examples, const DatasetConfig& config) {
    config.validate();
    if (examples.size() < 10)
        throw TooFewExamples("need at least 10 examples to split, have " +
                             std::to_string(examples.size()));
    if (config.chronological_split) {
        std::stable_sort(examples.begin(), examples.end(),
                         [](const LabeledExample& a, const LabeledExample& b) {
                             if (a.t != b.t) return a.t < b.t;
                             return a.cell_id < b.cell_id;
                         });
    } else {
        keyed_shuffle(examples, KeyedRng(config.split_seed, CH_SPLIT));
    }
    const std::size_t n = examples.size();
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * config.train_ratio));
    const std::size_t n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * config.test_ratio));
    SplitDataset out;
    out.train.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_train),
                    examples.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
    out.validation.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_train + n_test),
                          examples.end());
    return out;
}

std::vector<LabeledExample> build_examples(const Trace& trace, const DatasetConfig& config,
                                           int threads) {
    config.validate();
    GridView grid(trace, config.tdr_channels);
    const auto anchors = enumerate_anchors(trace, config);
    std::vector<LabeledExample> examples(anchors.size());
    parallel_for(anchors.size(), threads, [&](std::size_t i) {
        const auto& [cell_id, t] = anchors[i];
        LabeledExample& e = examples[i];
        e.cell_id = cell_id;
        e.t = t;
        e.tensor = build_tensor_on(grid, cell_id, t, config);
        e.label = make_label(trace, cell_id, t, config);
    });
    return examples;
}

SplitDataset build_dataset(const Trace& trace, const DatasetConfig& config, int threads) {
    return split_examples(build_examples(trace, config, threads), config);
}

namespace {

constexpr char kMagic[6] = {'N', 'Q', 'D', 'S', '1', '\n'};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

struct BinReader {
    const std::string& data;
    std::size_t pos = 0;
    const std::string& path;

    std::uint8_t u8() {
        if (pos + 1 > data.size()) throw MalformedRow(path, 0, "truncated example file");
        return static_cast<std::uint8_t>(data[pos++]);
    }
    std::uint32_t u32() {
        if (pos + 4 > data.size()) throw MalformedRow(path, 0, "truncated example file");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
};

std::string stats_csv(const std::vector<double>& v) {
    std::ostringstream os;
    char buf[64];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        os << (i ? "," : "") << buf;
    }
    return os.str();
}

std::vector<double> parse_stats_csv(const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (const auto& part : split_string(s, ',')) out.push_back(std::strtod(part.c_str(), nullptr));
    return out;
}

} // namespace

void save_dataset(const std::string& dir, const DatasetDir& data) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

    const DatasetConfig& cfg = data.config;
    std::string bin;
    bin.append(kMagic, sizeof(kMagic));
    const std::size_t per = cfg.n_channels() * static_cast<std::size_t>(cfg.window) *
                            cfg.n_cell_slots();
    put_u32(bin, static_cast<std::uint32_t>(data.examples.size()));
    put_u32(bin, static_cast<std::uint32_t>(cfg.n_channels()));
    put_u32(bin, static_cast<std::uint32_t>(cfg.window));
    put_u32(bin, static_cast<std::uint32_t>(cfg.n_cell_slots()));
    // Shared cell mask: slot count never exceeds the topology uniformly, so
    // every example carries the same mask.
    for (std::size_t c = 0; c < cfg.n_cell_slots(); ++c) {
        std::uint8_t m = data.examples.empty() ? 1 : data.examples.front().tensor.cell_mask[c];
        bin.push_back(static_cast<char>(m));
    }
    for (const auto& e : data.examples) {
        if (e.tensor.values.size() != per)
            throw ShapeMismatch("example tensor does not match the dataset config shape");
        put_u32(bin, e.cell_id);
        put_u32(bin, static_cast<std::uint32_t>(e.t));
        bin.push_back(static_cast<char>(e.label));
        for (float f : e.tensor.values) put_f32(bin, f);
    }
    write_text_file((fs::path(dir) / "examples.bin").string(), bin);

    ClassBalance balance = class_balance(data.examples);
    std::ostringstream meta;
    meta << cfg.to_text();
    meta << "[stats]\n";
    meta << "mean = " << stats_csv(data.stats.mean) << "\n";
    meta << "stddev = " << stats_csv(data.stats.stddev) << "\n";
    meta << "constant = ";
    for (std::size_t i = 0; i < data.stats.constant.size(); ++i)
        meta << (i ? "," : "") << static_cast<int>(data.stats.constant[i]);
    meta << "\n";
    meta << "[info]\n";
    meta << "trace_id = " << data.trace_id << "\n";
    meta << "valid_cells = " << data.valid_cells << "\n";
    meta << "examples = " << data.examples.size() << "\n";
    meta << "improvement = " << balance.improvement << "\n";
    meta << "deterioration = " << balance.deterioration << "\n";
    write_text_file((fs::path(dir) / "examples.meta").string(), meta.str());
}

DatasetDir load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string meta_path = (fs::path(dir) / "examples.meta").string();
    const std::string bin_path = (fs::path(dir) / "examples.bin").string();

    KvConfig kv = KvConfig::parse_file(meta_path);
    DatasetDir out;
    out.stats.mean = parse_stats_csv(kv.get_string("stats", "mean"));
    out.stats.stddev = parse_stats_csv(kv.get_string("stats", "stddev"));
    for (const auto& part : split_string(kv.get_string("stats", "constant"), ','))
        out.stats.constant.push_back(static_cast<std::uint8_t>(std::stoi(trim(part))));
    out.trace_id = kv.get_string("info", "trace_id");
    out.valid_cells = static_cast<std::size_t>(kv.get_int("info", "valid_cells", 0));
    kv.get_int("info", "examples", 0);
    kv.get_int("info", "improvement", 0);
    kv.get_int("info", "deterioration", 0);
    out.config = DatasetConfig::from_kv(kv);
    kv.reject_unconsumed();

    const std::string bin = read_text_file(bin_path);
    if (bin.size() < sizeof(kMagic) || std::memcmp(bin.data(), kMagic, sizeof(kMagic)) != 0)
        throw MalformedRow(bin_path, 0, "bad magic");
    BinReader r{bin, sizeof(kMagic), bin_path};
    const std::uint32_t count = r.u32();
    const std::uint32_t channels = r.u32();
    const std::uint32_t window = r.u32();
    const std::uint32_t cells = r.u32();
    if (channels != out.config.n_channels() || window != static_cast<std::uint32_t>(out.config.window) ||
        cells != out.config.n_cell_slots())
        throw ShapeMismatch("example file shape disagrees with the dataset config");
    std::vector<std::uint8_t> mask(cells);
    for (auto& m : mask) m = r.u8();

    out.examples.resize(count);
    const std::size_t per = static_cast<std::size_t>(channels) * window * cells;
    for (auto& e : out.examples) {
        e.cell_id = r.u32();
        e.t = static_cast<std::int64_t>(r.u32());
        const std::uint8_t lab = r.u8();
        if (lab > 1) throw MalformedRow(bin_path, 0, "bad label byte");
        e.label = static_cast<Label>(lab);
        e.tensor.channels = channels;
        e.tensor.window = window;
        e.tensor.cells = cells;
        e.tensor.cell_mask = mask;
        e.tensor.values.resize(per);
        for (auto& v : e.tensor.values) v = r.f32();
    }
    if (r.pos != bin.size()) throw MalformedRow(bin_path, 0, "trailing bytes after last example");
    return out;
}

} // namespace netqos
