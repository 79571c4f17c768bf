#pragma once

#include "netqos/kvconfig.hpp"
#include "netqos/telemetry.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netqos {

struct DatasetConfig {
    int window = 6;    // W: history steps, newest = anchor step itself
    int neighbors = 4; // N: adjacent cells; tensor cell axis is [self, n1..nN]
    int horizon = 2;   // H: future steps for labeling
    double deadband = 0.10; // relative delay-change threshold
    double train_ratio = 0.70;
    double test_ratio = 0.20;
    double validation_ratio = 0.10;
    std::uint64_t split_seed = 0;
    bool tdr_channels = false;        // append per-step TDR byte/count channels
    bool chronological_split = false; // optional leak-free split; default is the
                                      // random example-level protocol

    std::size_t n_channels() const { return kKpiCount + (tdr_channels ? 2u : 0u); }
    std::size_t n_cell_slots() const { return static_cast<std::size_t>(neighbors) + 1; }

    void validate() const; // throws ConfigError

    static DatasetConfig from_kv(const KvConfig& kv);
    static DatasetConfig from_file(const std::string& path);
    std::string to_text() const;
};

enum class Label : std::uint8_t { improvement = 0, deterioration = 1 };

inline const char* label_name(Label l) {
    return l == Label::improvement ? "improvement" : "deterioration";
}

/// K x W x C tensor of KPI history. Channel order is the KPI registry order;
/// cell slots beyond the available topology are zero-filled with mask 0;
/// time axis runs oldest to newest.
struct StateTensor {
    std::size_t channels = 0;
    std::size_t window = 0;
    std::size_t cells = 0;
    std::vector<float> values;          // (k * window + w) * cells + c
    std::vector<std::uint8_t> cell_mask; // per cell slot, 1 = real cell

    float at(std::size_t k, std::size_t w, std::size_t c) const {
        return values[(k * window + w) * cells + c];
    }
    float& at(std::size_t k, std::size_t w, std::size_t c) {
        return values[(k * window + w) * cells + c];
    }
};

struct LabeledExample {
    std::uint32_t cell_id = 0;
    std::int64_t t = 0; // anchor timestamp
    StateTensor tensor;
    Label label = Label::improvement;
};

/// Per-channel standardization parameters, fitted on the training split only.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::uint8_t> constant; // sigma = 0 channels pass through unchanged

    bool empty() const { return mean.empty(); }
};

struct SplitDataset {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
    std::vector<LabeledExample> validation;

    std::size_t size() const { return train.size() + test.size() + validation.size(); }
};

struct ClassBalance {
    std::size_t improvement = 0;
    std::size_t deterioration = 0;
    double deterioration_fraction() const {
        std::size_t n = improvement + deterioration;
        return n ? static_cast<double>(deterioration) / static_cast<double>(n) : 0.0;
    }
};

ClassBalance class_balance(const std::vector<LabeledExample>& examples);

/// Raw KPI lookback tensor for (cell, t). Throws InsufficientHistory or UnknownCell.
StateTensor build_tensor(const Trace& trace, std::uint32_t cell_id, std::int64_t t,
                         const DatasetConfig& config);

/// DETERIORATION iff mean delay over [t, t+H*step) exceeds the mean over
/// [t-H*step, t) by more than the relative deadband. Throws NoQosSamples.
Label make_label(const Trace& trace, std::uint32_t cell_id, std::int64_t t,
                 const DatasetConfig& config);

/// Anchor grid points satisfying the history/horizon preconditions (QoS window
/// availability included), ordered by (cell_id, t). Shared by the dataset
/// builder and the clairvoyant oracle.
std::vector<std::pair<std::uint32_t, std::int64_t>> enumerate_anchors(const Trace& trace,
                                                                      const DatasetConfig& config);

ChannelStats standardize_fit(const std::vector<LabeledExample>& examples); // throws EmptyInput
void standardize_apply(std::vector<LabeledExample>& examples, const ChannelStats& stats);
void standardize_apply(StateTensor& tensor, const ChannelStats& stats);

/// Deterministic seed-shuffled 70/20/10 cut (or chronological when configured).
/// Throws TooFewExamples below 10 examples.
SplitDataset split_examples(std::vector<LabeledExample> examples, const DatasetConfig& config);

/// build_tensor + make_label over all anchors, then split. Tensors are raw
/// (unstandardized). Throws TooFewExamples on short traces.
SplitDataset build_dataset(const Trace& trace, const DatasetConfig& config, int threads = 1);

/// All examples in (cell_id, t) order, without splitting.
std::vector<LabeledExample> build_examples(const Trace& trace, const DatasetConfig& config,
                                           int threads = 1);

// On-disk dataset: examples.bin (magic NQDS1, then per example cell_id u32,
// t u32, label u8, channels*window*cells little-endian f32) plus examples.meta
// (config, channel stats fitted on the train split, class balance, provenance).
struct DatasetDir {
    std::vector<LabeledExample> examples; // canonical (cell_id, t) order
    DatasetConfig config;
    ChannelStats stats;
    std::string trace_id;
    std::size_t valid_cells = 0;
};

void save_dataset(const std::string& dir, const DatasetDir& data);
DatasetDir load_dataset(const std::string& dir);

} // namespace netqos
