#pragma once

#include "netqos/dataset.hpp"
#include "netqos/kvconfig.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace netqos {

/// Summary features of the self-cell slice (cell slot 0): per channel, the
/// mean, standard deviation, last value, and least-squares slope over the
/// window. 4 x channels reals; 32 for the default 8-KPI tensor.
std::vector<double> feature_vector(const StateTensor& tensor);

struct Prediction {
    Label label = Label::improvement;
    double p_deteriorate = 0.0;
};

struct BaselineHyper {
    int knn_k = 5;
    int svm_epochs = 200;
    double svm_lr = 0.05;
    double svm_lambda = 1e-4;
    int dt_max_depth = 8;
    int dt_min_leaf = 2;
    int gbm_stages = 100;
    int gbm_depth = 3;
    int gbm_min_leaf = 5;
    double gbm_shrinkage = 0.1;

    void validate() const; // throws BadHyper
    static BaselineHyper from_kv(const KvConfig& kv);
    std::string to_text() const;
};

struct KnnModel {
    int k = 5;
    std::size_t dim = 0;
    std::vector<double> points; // row-major n x dim
    std::vector<Label> labels;

    std::size_t size() const { return labels.size(); }
};

struct SvmModel {
    std::vector<double> w;
    double b = 0.0;
};

/// Axis-aligned tree node; child indices are -1 on leaves. Thresholds are
/// float32 midpoints so the on-disk form reproduces decisions exactly.
struct TreeNode {
    int feature = -1;
    float threshold = 0.0f;
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf: p_deteriorate (dt) or additive score (gbm)
};

struct DtModel {
    std::vector<TreeNode> nodes; // node 0 is the root
};

struct GbmModel {
    double base_score = 0.0; // initial log-odds
    double shrinkage = 0.1;
    std::vector<std::vector<TreeNode>> stages;
    std::vector<double> train_loss; // per stage, after the stage is applied
};

KnnModel knn_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                   const BaselineHyper& hyper);
SvmModel svm_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                   const BaselineHyper& hyper, std::uint64_t seed);
DtModel dt_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                 const BaselineHyper& hyper);
GbmModel gbm_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                   const BaselineHyper& hyper);

Prediction knn_predict(const KnnModel& model, const std::vector<double>& x);
Prediction svm_predict(const SvmModel& model, const std::vector<double>& x);
Prediction dt_predict(const DtModel& model, const std::vector<double>& x);
Prediction gbm_predict(const GbmModel& model, const std::vector<double>& x);

} // namespace netqos
