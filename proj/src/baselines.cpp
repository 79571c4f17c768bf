#include "netqos/baselines.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"
#include "netqos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace netqos {

namespace {

constexpr std::uint64_t CH_SVM_SHUFFLE = 400;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

std::vector<double> feature_vector(const StateTensor& tensor) {
    std::vector<double> out;
    out.reserve(4 * tensor.channels);
    const std::size_t w = tensor.window;
    const double wq = static_cast<double>(w);
    const double tbar = (wq - 1.0) / 2.0;
    double tvar = 0.0;
    for (std::size_t i = 0; i < w; ++i) tvar += (static_cast<double>(i) - tbar) * (static_cast<double>(i) - tbar);
    for (std::size_t k = 0; k < tensor.channels; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < w; ++i) sum += tensor.at(k, i, 0);
        const double mean = sum / wq;
        double var = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            const double v = tensor.at(k, i, 0);
            var += (v - mean) * (v - mean);
            cov += (static_cast<double>(i) - tbar) * (v - mean);
        }
        out.push_back(mean);
        out.push_back(std::sqrt(var / wq));
        out.push_back(tensor.at(k, w - 1, 0));
        out.push_back(tvar > 0.0 ? cov / tvar : 0.0);
    }
    return out;
}

void BaselineHyper::validate() const {
    if (knn_k < 1) throw BadHyper("knn_k must be >= 1");
    if (svm_epochs < 1) throw BadHyper("svm_epochs must be >= 1");
    if (svm_lr <= 0.0) throw BadHyper("svm_lr must be > 0");
    if (svm_lambda < 0.0) throw BadHyper("svm_lambda must be >= 0");
    if (dt_max_depth < 1) throw BadHyper("dt_max_depth must be >= 1");
    if (dt_min_leaf < 1) throw BadHyper("dt_min_leaf must be >= 1");
    if (gbm_stages < 1) throw BadHyper("gbm_stages must be >= 1");
    if (gbm_depth < 1) throw BadHyper("gbm_depth must be >= 1");
    if (gbm_min_leaf < 1) throw BadHyper("gbm_min_leaf must be >= 1");
    if (gbm_shrinkage <= 0.0 || gbm_shrinkage > 1.0)
        throw BadHyper("gbm_shrinkage must be in (0,1]");
}

BaselineHyper BaselineHyper::from_kv(const KvConfig& kv) {
    BaselineHyper h;
    h.knn_k = static_cast<int>(kv.get_int("hyper", "knn_k", h.knn_k));
    h.svm_epochs = static_cast<int>(kv.get_int("hyper", "svm_epochs", h.svm_epochs));
    h.svm_lr = kv.get_real("hyper", "svm_lr", h.svm_lr);
    h.svm_lambda = kv.get_real("hyper", "svm_lambda", h.svm_lambda);
    h.dt_max_depth = static_cast<int>(kv.get_int("hyper", "dt_max_depth", h.dt_max_depth));
    h.dt_min_leaf = static_cast<int>(kv.get_int("hyper", "dt_min_leaf", h.dt_min_leaf));
    h.gbm_stages = static_cast<int>(kv.get_int("hyper", "gbm_stages", h.gbm_stages));
    h.gbm_depth = static_cast<int>(kv.get_int("hyper", "gbm_depth", h.gbm_depth));
    h.gbm_min_leaf = static_cast<int>(kv.get_int("hyper", "gbm_min_leaf", h.gbm_min_leaf));
    h.gbm_shrinkage = kv.get_real("hyper", "gbm_shrinkage", h.gbm_shrinkage);
    h.validate();
    return h;
}

std::string BaselineHyper::to_text() const {
    std::ostringstream os;
    os << "[hyper]\n";
    os << "knn_k = " << knn_k << "\n";
    os << "svm_epochs = " << svm_epochs << "\n";
    os << "svm_lr = " << format_real(svm_lr) << "\n";
    os << "svm_lambda = " << format_real(svm_lambda) << "\n";
    os << "dt_max_depth = " << dt_max_depth << "\n";
    os << "dt_min_leaf = " << dt_min_leaf << "\n";
    os << "gbm_stages = " << gbm_stages << "\n";
    os << "gbm_depth = " << gbm_depth << "\n";
    os << "gbm_min_leaf = " << gbm_min_leaf << "\n";
    os << "gbm_shrinkage = " << format_real(gbm_shrinkage) << "\n";
    return os.str();
}

namespace {

void check_training_input(const std::vector<std::vector<double>>& x, const std::vector<Label>& y) {
    if (x.empty()) throw EmptyTrainSet("no training examples");
    if (x.size() != y.size()) throw LengthMismatch("feature/label count mismatch");
    for (const auto& row : x)
        if (row.size() != x.front().size())
            throw LengthMismatch("feature rows have mixed dimensionality");
}

} // namespace

KnnModel knn_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                   const BaselineHyper& hyper) {
    hyper.validate();
    check_training_input(x, y);
    if (static_cast<std::size_t>(hyper.knn_k) > x.size())
        throw BadHyper("knn_k=" + std::to_string(hyper.knn_k) + " exceeds training size " +
                       std::to_string(x.size()));
    KnnModel m;
    m.k = hyper.knn_k;
    m.dim = x.front().size();
    m.points.reserve(x.size() * m.dim);
    for (const auto& row : x) m.points.insert(m.points.end(), row.begin(), row.end());
    m.labels = y;
    return m;
}

Prediction knn_predict(const KnnModel& model, const std::vector<double>& x) {
    if (x.size() != model.dim) throw ShapeMismatch("feature dimensionality mismatch");
    const std::size_t n = model.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        const double* p = model.points.data() + i * model.dim;
        for (std::size_t j = 0; j < model.dim; ++j) d += (p[j] - x[j]) * (p[j] - x[j]);
        dist[i] = {d, i};
    }
    const std::size_t k = static_cast<std::size_t>(model.k);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t det = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (model.labels[dist[i].second] == Label::deterioration) ++det;
    Prediction pred;
    pred.p_deteriorate = static_cast<double>(det) / static_cast<double>(k);
    // strict majority; ties fall to the admit-friendly class
    pred.label = 2 * det > k ? Label::deterioration : Label::improvement;
    return pred;
}

SvmModel svm_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                   const BaselineHyper& hyper, std::uint64_t seed) {
    hyper.validate();
    check_training_input(x, y);
    SvmModel m;
    m.w.assign(x.front().size(), 0.0);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < hyper.svm_epochs; ++epoch) {
        keyed_shuffle(order, KeyedRng(seed, CH_SVM_SHUFFLE, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i : order) {
            const double yy = y[i] == Label::deterioration ? 1.0 : -1.0;
            double margin = m.b;
            for (std::size_t j = 0; j < m.w.size(); ++j) margin += m.w[j] * x[i][j];
            const double decay = 1.0 - hyper.svm_lr * hyper.svm_lambda;
            if (yy * margin < 1.0) {
                for (std::size_t j = 0; j < m.w.size(); ++j)
                    m.w[j] = decay * m.w[j] + hyper.svm_lr * yy * x[i][j];
                m.b += hyper.svm_lr * yy;
            } else {
                for (auto& wj : m.w) wj *= decay;
            }
        }
    }
    // Snap to float32-representable values so the serialized form (f32 blob)
    // reproduces margins, and therefore decisions, exactly.
    for (auto& wj : m.w) wj = static_cast<double>(static_cast<float>(wj));
    m.b = static_cast<double>(static_cast<float>(m.b));
    return m;
}

Prediction svm_predict(const SvmModel& model, const std::vector<double>& x) {
    if (x.size() != model.w.size()) throw ShapeMismatch("feature dimensionality mismatch");
    double margin = model.b;
    for (std::size_t j = 0; j < x.size(); ++j) margin += model.w[j] * x[j];
    Prediction pred;
    pred.p_deteriorate = sigmoid(margin);
    pred.label = margin > 0.0 ? Label::deterioration : Label::improvement;
    return pred;
}

namespace {

// Shared split search on float-cast feature values so training partitions and
// float32-threshold predictions agree exactly. Returns false if no valid split.
struct SplitChoice {
    int feature = -1;
    float threshold = 0.0f;
    double score = 0.0; // lower is better
};

// target: per-index pair (value_to_fit, weight) for regression trees, or the
// label for gini. Implemented as two variants below.
bool best_gini_split(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                     const std::vector<std::size_t>& idx, int min_leaf, SplitChoice& out) {
    const std::size_t n = idx.size();
    const std::size_t dim = x.front().size();
    std::size_t det_total = 0;
    for (std::size_t i : idx)
        if (y[i] == Label::deterioration) ++det_total;

    bool found = false;
    std::vector<std::pair<float, std::uint8_t>> vals(n);
    for (std::size_t f = 0; f < dim; ++f) {
        for (std::size_t i = 0; i < n; ++i)
            vals[i] = {static_cast<float>(x[idx[i]][f]),
                       static_cast<std::uint8_t>(y[idx[i]] == Label::deterioration ? 1 : 0)};
        std::sort(vals.begin(), vals.end());
        std::size_t det_left = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            det_left += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            const std::size_t nl = i + 1, nr = n - nl;
            if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf))
                continue;
            const double pl = static_cast<double>(det_left) / static_cast<double>(nl);
            const double pr = static_cast<double>(det_total - det_left) / static_cast<double>(nr);
            const double score =
                (static_cast<double>(nl) * 2.0 * pl * (1.0 - pl) +
                 static_cast<double>(nr) * 2.0 * pr * (1.0 - pr)) /
                static_cast<double>(n);
            if (!found || score < out.score - 1e-15) {
                float thr = static_cast<float>(
                    (static_cast<double>(vals[i].first) + static_cast<double>(vals[i + 1].first)) /
                    2.0);
                // float rounding may push the midpoint onto the right value;
                // back off so the <= test reproduces this exact partition
                if (thr >= vals[i + 1].first) thr = vals[i].first;
                out.feature = static_cast<int>(f);
                out.threshold = thr;
                out.score = score;
                found = true;
            }
        }
    }
    return found;
}

bool best_sse_split(const std::vector<std::vector<double>>& x, const std::vector<double>& g,
                    const std::vector<std::size_t>& idx, int min_leaf, SplitChoice& out) {
    const std::size_t n = idx.size();
    const std::size_t dim = x.front().size();
    double g_total = 0.0;
    for (std::size_t i : idx) g_total += g[i];

    bool found = false;
    std::vector<std::pair<float, double>> vals(n);
    for (std::size_t f = 0; f < dim; ++f) {
        for (std::size_t i = 0; i < n; ++i) vals[i] = {static_cast<float>(x[idx[i]][f]), g[idx[i]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double g_left = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            g_left += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            const std::size_t nl = i + 1, nr = n - nl;
            if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf))
                continue;
            const double g_right = g_total - g_left;
            // negative gain: maximizing sum-of-means reduction == minimizing score
            const double score = -(g_left * g_left / static_cast<double>(nl) +
                                   g_right * g_right / static_cast<double>(nr));
            if (!found || score < out.score - 1e-15) {
                float thr = static_cast<float>(
                    (static_cast<double>(vals[i].first) + static_cast<double>(vals[i + 1].first)) /
                    2.0);
                if (thr >= vals[i + 1].first) thr = vals[i].first;
                out.feature = static_cast<int>(f);
                out.threshold = thr;
                out.score = score;
                found = true;
            }
        }
    }
    return found;
}

double node_gini(const std::vector<Label>& y, const std::vector<std::size_t>& idx) {
    std::size_t det = 0;
    for (std::size_t i : idx)
        if (y[i] == Label::deterioration) ++det;
    const double p = static_cast<double>(det) / static_cast<double>(idx.size());
    return 2.0 * p * (1.0 - p);
}

int build_dt_node(std::vector<TreeNode>& nodes, const std::vector<std::vector<double>>& x,
                  const std::vector<Label>& y, std::vector<std::size_t>& idx, int depth,
                  const BaselineHyper& hyper) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    std::size_t det = 0;
    for (std::size_t i : idx)
        if (y[i] == Label::deterioration) ++det;
    const double p = static_cast<double>(det) / static_cast<double>(idx.size());

    SplitChoice split;
    const bool splittable = depth < hyper.dt_max_depth &&
                            idx.size() >= 2 * static_cast<std::size_t>(hyper.dt_min_leaf) &&
                            det != 0 && det != idx.size() &&
                            best_gini_split(x, y, idx, hyper.dt_min_leaf, split) &&
                            node_gini(y, idx) - split.score > 1e-12;
    if (!splittable) {
        nodes[static_cast<std::size_t>(id)].value = p;
        return id;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
        if (static_cast<float>(x[i][static_cast<std::size_t>(split.feature)]) <= split.threshold)
            left.push_back(i);
        else
            right.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes[static_cast<std::size_t>(id)].feature = split.feature;
    nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
    const int l = build_dt_node(nodes, x, y, left, depth + 1, hyper);
    const int r = build_dt_node(nodes, x, y, right, depth + 1, hyper);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
}

} // namespace

DtModel dt_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                 const BaselineHyper& hyper) {
    hyper.validate();
    check_training_input(x, y);
    DtModel m;
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    build_dt_node(m.nodes, x, y, idx, 0, hyper);
    return m;
}

namespace {

double tree_eval(const std::vector<TreeNode>& nodes, const std::vector<double>& x) {
    int id = 0;
    for (;;) {
        const TreeNode& node = nodes[static_cast<std::size_t>(id)];
        if (node.feature < 0) return node.value;
        id = static_cast<float>(x[static_cast<std::size_t>(node.feature)]) <= node.threshold
                 ? node.left
                 : node.right;
    }
}

} // namespace

Prediction dt_predict(const DtModel& model, const std::vector<double>& x) {
    if (model.nodes.empty()) throw EmptyInput("decision tree has no nodes");
    Prediction pred;
    pred.p_deteriorate = tree_eval(model.nodes, x);
    pred.label = pred.p_deteriorate > 0.5 ? Label::deterioration : Label::improvement;
    return pred;
}

namespace {

void build_reg_node(std::vector<TreeNode>& nodes, const std::vector<std::vector<double>>& x,
                    const std::vector<double>& g, const std::vector<double>& h,
                    std::vector<std::size_t>& idx, int depth, const BaselineHyper& hyper) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    SplitChoice split;
    const bool splittable = depth < hyper.gbm_depth &&
                            idx.size() >= 2 * static_cast<std::size_t>(hyper.gbm_min_leaf) &&
                            best_sse_split(x, g, idx, hyper.gbm_min_leaf, split);
    if (!splittable) {
        double gs = 0.0, hs = 0.0;
        for (std::size_t i : idx) {
            gs += g[i];
            hs += h[i];
        }
        double v = gs / (hs + 1e-6); // Newton step on logistic loss
        v = std::min(4.0, std::max(-4.0, v));
        nodes[static_cast<std::size_t>(id)].value = v;
        return;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
        if (static_cast<float>(x[i][static_cast<std::size_t>(split.feature)]) <= split.threshold)
            left.push_back(i);
        else
            right.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes[static_cast<std::size_t>(id)].feature = split.feature;
    nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
    const std::size_t before = nodes.size();
    build_reg_node(nodes, x, g, h, left, depth + 1, hyper);
    nodes[static_cast<std::size_t>(id)].left = static_cast<int>(before);
    const std::size_t mid = nodes.size();
    build_reg_node(nodes, x, g, h, right, depth + 1, hyper);
    nodes[static_cast<std::size_t>(id)].right = static_cast<int>(mid);
}

double logistic_loss(const std::vector<double>& f, const std::vector<Label>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double p = sigmoid(f[i]);
        const double yy = y[i] == Label::deterioration ? 1.0 : 0.0;
        loss += -(yy * std::log(std::max(p, 1e-300)) +
                  (1.0 - yy) * std::log(std::max(1.0 - p, 1e-300)));
    }
    return loss / static_cast<double>(f.size());
}

} // namespace

GbmModel gbm_train(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                   const BaselineHyper& hyper) {
    hyper.validate();
    check_training_input(x, y);
    const std::size_t n = x.size();

    GbmModel m;
    m.shrinkage = hyper.gbm_shrinkage;
    std::size_t det = 0;
    for (Label l : y)
        if (l == Label::deterioration) ++det;
    const double prior = (static_cast<double>(det) + 0.5) / (static_cast<double>(n) + 1.0);
    m.base_score = std::log(prior / (1.0 - prior));

    std::vector<double> f(n, m.base_score);
    double prev_loss = logistic_loss(f, y);

    std::vector<double> g(n), h(n);
    for (int stage = 0; stage < hyper.gbm_stages; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            const double yy = y[i] == Label::deterioration ? 1.0 : 0.0;
            g[i] = yy - p;          // negative gradient
            h[i] = p * (1.0 - p);   // hessian
        }
        std::vector<TreeNode> tree;
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        build_reg_node(tree, x, g, h, idx, 0, hyper);

        // Deterministic halving safeguard: shrink the stage until training
        // loss does not increase; drop it entirely if that never happens.
        std::vector<double> contrib(n);
        for (std::size_t i = 0; i < n; ++i) contrib[i] = m.shrinkage * tree_eval(tree, x[i]);
        bool accepted = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i) trial[i] = f[i] + contrib[i];
            const double loss = logistic_loss(trial, y);
            if (loss <= prev_loss) {
                f = std::move(trial);
                prev_loss = loss;
                accepted = true;
                break;
            }
            for (auto& node : tree)
                if (node.feature < 0) node.value *= 0.5;
            for (auto& c : contrib) c *= 0.5;
        }
        if (!accepted) break;
        m.stages.push_back(std::move(tree));
        m.train_loss.push_back(prev_loss);
    }
    return m;
}

Prediction gbm_predict(const GbmModel& model, const std::vector<double>& x) {
    double f = model.base_score;
    for (const auto& tree : model.stages) f += model.shrinkage * tree_eval(tree, x);
    Prediction pred;
    pred.p_deteriorate = sigmoid(f);
    pred.label = pred.p_deteriorate > 0.5 ? Label::deterioration : Label::improvement;
    return pred;
}

} // namespace netqos
