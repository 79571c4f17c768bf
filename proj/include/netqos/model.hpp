#pragma once

#include "netqos/baselines.hpp"
#include "netqos/cnn.hpp"
#include "netqos/dataset.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace netqos {

enum class ModelKind : std::uint8_t { cnn, knn, svm, dt, gbm };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name); // throws KindUnsupported

/// A trained classifier plus everything needed to run it on raw telemetry:
/// the tensor geometry it was trained for and the standardization fitted on
/// its training split. Exactly one of the kind members is populated.
struct Model {
    ModelKind kind = ModelKind::cnn;
    DatasetConfig ds_config;
    ChannelStats stats;
    std::uint64_t train_seed = 0;
    std::uint32_t train_epochs = 0;
    std::uint64_t config_hash = 0; // fnv1a64 of ds_config.to_text()

    CnnModel cnn;
    KnnModel knn;
    SvmModel svm;
    DtModel dt;
    GbmModel gbm;
};

/// Standardizes a raw tensor with the model's channel stats, then runs the
/// underlying classifier. Throws ShapeMismatch on geometry disagreement.
Prediction model_predict(const Model& model, const StateTensor& raw);

struct Metrics {
    std::size_t n = 0;
    // confusion[actual][predicted], indexed by Label value
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    double accuracy = 0.0;
    std::array<double, 2> precision{}; // 0 when the class is never predicted
    std::array<double, 2> recall{};    // 0 when the class never occurs
};

Metrics evaluate(const Model& model, const std::vector<LabeledExample>& raw_examples,
                 int threads = 1); // throws EmptyInput

std::string metrics_csv(const Metrics& m);

/// Trains one model kind on raw-tensor splits. Standardization is fitted on
/// the training split unless ready-made stats are supplied (e.g. from a
/// dataset directory). For the cnn kind the returned history backs
/// history.csv; baseline kinds train in closed form or fixed passes and
/// produce no per-epoch history.
struct TrainedModel {
    Model model;
    std::vector<HistoryRow> history;
};

TrainedModel train_model(ModelKind kind, const SplitDataset& split, const DatasetConfig& ds_config,
                         const ChannelStats& stats, const TrainConfig& train_config,
                         const BaselineHyper& hyper, std::uint64_t seed, int threads = 1);

// Model file: line "NQOS-MODEL v1", a key=value header ([model], [dataset],
// [stats] sections), a "blob <bytes>" line, then the little-endian parameter
// blob. Round-trips with bit-identical predictions for every kind.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

} // namespace netqos
