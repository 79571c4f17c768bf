#pragma once

#include "netqos/dataset.hpp"
#include "netqos/kvconfig.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace netqos {

// Fixed topology: conv(8 filters, 3x3, same, ReLU) -> conv(16, 3x3, same,
// ReLU) -> average pool 2x2 stride 2 (floor) -> fc 32 ReLU -> fc 2 -> softmax.
// Parameters are stored as float32 so a saved model reloads bit-identically;
// all arithmetic runs in double.
struct CnnModel {
    std::size_t in_channels = 0;
    std::size_t in_h = 0; // time axis
    std::size_t in_w = 0; // cell axis
    std::uint32_t version = 0; // bumped by online_update

    std::vector<float> conv1_w; // [8][in_channels][3][3]
    std::vector<float> conv1_b; // [8]
    std::vector<float> conv2_w; // [16][8][3][3]
    std::vector<float> conv2_b; // [16]
    std::vector<float> fc1_w;   // [32][16 * (in_h/2) * (in_w/2)]
    std::vector<float> fc1_b;   // [32]
    std::vector<float> fc2_w;   // [2][32]
    std::vector<float> fc2_b;   // [2]

    std::size_t pool_h() const { return in_h / 2; }
    std::size_t pool_w() const { return in_w / 2; }
    std::size_t flat() const { return 16 * pool_h() * pool_w(); }
    std::size_t param_count() const;

    // Uniform view over all parameter arrays, in a fixed order.
    float* param(std::size_t i);
    double param_get(std::size_t i) const;
    void param_set(std::size_t i, float v);
};

inline constexpr std::size_t kConv1Filters = 8;
inline constexpr std::size_t kConv2Filters = 16;
inline constexpr std::size_t kFc1Units = 32;
inline constexpr std::size_t kClasses = 2;

/// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic in seed. Throws ShapeMismatch unless in_h >= 2 and in_w >= 2.
CnnModel cnn_init(std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                  std::uint64_t seed);

/// Softmax class probabilities (p_improve, p_deteriorate). Throws ShapeMismatch.
std::array<double, 2> cnn_forward(const CnnModel& model, const StateTensor& tensor);

/// Gradient of the class-weighted cross-entropy at one example, same layout as
/// the parameter view.
struct CnnGrads {
    std::vector<double> values;
};

double cnn_loss_grad(const CnnModel& model, const StateTensor& tensor, Label label,
                     double class_weight, CnnGrads& grads);

struct TrainConfig {
    int epochs = 60;
    int batch = 32;
    double lr = 0.05;
    double momentum = 0.9;
    // {0, 0} = balance automatically by inverse class frequency.
    std::array<double, 2> class_weights = {0.0, 0.0};
    int patience = 8; // early-stop epochs without validation-loss improvement
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
    static TrainConfig from_kv(const KvConfig& kv);
    static TrainConfig from_file(const std::string& path);
    std::string to_text() const;
};

struct HistoryRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct CnnTrainResult {
    CnnModel model; // parameters from the best-validation-loss epoch
    std::vector<HistoryRow> history;
};

/// Mini-batch SGD with momentum on class-weighted cross-entropy. Examples must
/// already be standardized. Deterministic in (data, config, seed) for any
/// thread count. Throws EmptyTrainSet.
CnnTrainResult cnn_train(CnnModel model, const SplitDataset& split, const TrainConfig& cfg,
                         int threads = 1);

/// Central-difference check of the analytic gradient over every parameter;
/// returns the max relative error. Inputs sitting on a ReLU kink are nudged by
/// +1e-6 before checking, per the documented convention.
double grad_check(const CnnModel& model, const StateTensor& tensor, Label label,
                  double eps = 1e-4);

/// SGD on the batch only, lr = 0.1 x cfg.lr, `epochs` passes; increments the
/// model version. Throws EmptyInput.
CnnModel online_update(CnnModel model, const std::vector<LabeledExample>& batch,
                       const TrainConfig& cfg, int epochs = 1);

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

namespace detail {

enum class BackwardFault {
    none,
    transposed_conv_kernel, // conv1 weight gradient indexed [kx][ky]: mutation probe
};

double cnn_loss_grad_fault(const CnnModel& model, const StateTensor& tensor, Label label,
                           double class_weight, CnnGrads& grads, BackwardFault fault);

} // namespace detail

} // namespace netqos
