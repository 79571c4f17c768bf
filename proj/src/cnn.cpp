#include "netqos/cnn.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"
#include "netqos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <utility>

namespace netqos {

namespace {

constexpr std::uint64_t CH_CNN_INIT = 300;
constexpr std::uint64_t CH_CNN_SHUFFLE = 301;

std::size_t conv1_w_size(const CnnModel& m) { return kConv1Filters * m.in_channels * 9; }
std::size_t conv2_w_size() { return kConv2Filters * kConv1Filters * 9; }

} // namespace

std::size_t CnnModel::param_count() const {
    return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size() + fc1_w.size() +
           fc1_b.size() + fc2_w.size() + fc2_b.size();
}

float* CnnModel::param(std::size_t i) {
    std::vector<float>* arrays[] = {&conv1_w, &conv1_b, &conv2_w, &conv2_b,
                                    &fc1_w,   &fc1_b,   &fc2_w,   &fc2_b};
    for (auto* a : arrays) {
        if (i < a->size()) return &(*a)[i];
        i -= a->size();
    }
    return nullptr;
}

double CnnModel::param_get(std::size_t i) const {
    const float* p = const_cast<CnnModel*>(this)->param(i);
    return p ? static_cast<double>(*p) : 0.0;
}

void CnnModel::param_set(std::size_t i, float v) {
    float* p = param(i);
    if (p) *p = v;
}

CnnModel cnn_init(std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                  std::uint64_t seed) {
    if (in_channels < 1 || in_h < 2 || in_w < 2)
        throw ShapeMismatch("CNN input must be at least 1x2x2, got " +
                            std::to_string(in_channels) + "x" + std::to_string(in_h) + "x" +
                            std::to_string(in_w));
    CnnModel m;
    m.in_channels = in_channels;
    m.in_h = in_h;
    m.in_w = in_w;
    m.conv1_w.assign(conv1_w_size(m), 0.0f);
    m.conv1_b.assign(kConv1Filters, 0.0f);
    m.conv2_w.assign(conv2_w_size(), 0.0f);
    m.conv2_b.assign(kConv2Filters, 0.0f);
    m.fc1_w.assign(kFc1Units * m.flat(), 0.0f);
    m.fc1_b.assign(kFc1Units, 0.0f);
    m.fc2_w.assign(kClasses * kFc1Units, 0.0f);
    m.fc2_b.assign(kClasses, 0.0f);

    KeyedRng rng(seed, CH_CNN_INIT);
    auto glorot = [&](std::vector<float>& w, std::size_t fan_in, std::size_t fan_out) {
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& v : w) v = static_cast<float>(rng.uniform(-s, s));
    };
    glorot(m.conv1_w, in_channels * 9, kConv1Filters * 9);
    glorot(m.conv2_w, kConv1Filters * 9, kConv2Filters * 9);
    glorot(m.fc1_w, m.flat(), kFc1Units);
    glorot(m.fc2_w, kFc1Units, kClasses);
    return m;
}

namespace {

// Forward workspace; pre-activations kept for ReLU masks in the backward pass.
struct Activations {
    std::vector<double> z1, a1; // [8][H][W]
    std::vector<double> z2, a2; // [16][H][W]
    std::vector<double> pooled; // [flat]
    std::vector<double> zfc1, h; // [32]
    std::array<double, 2> logits{};
    std::array<double, 2> probs{};
};

void conv_same(const double* in, std::size_t in_c, std::size_t H, std::size_t W,
               const float* w, const float* b, std::size_t out_c, double* z) {
    for (std::size_t f = 0; f < out_c; ++f) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                double acc = static_cast<double>(b[f]);
                for (std::size_t c = 0; c < in_c; ++c) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = static_cast<int>(y) + ky - 1;
                        if (yy < 0 || yy >= static_cast<int>(H)) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = static_cast<int>(x) + kx - 1;
                            if (xx < 0 || xx >= static_cast<int>(W)) continue;
                            acc += static_cast<double>(
                                       w[((f * in_c + c) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                         static_cast<std::size_t>(kx)]) *
                                   in[(c * H + static_cast<std::size_t>(yy)) * W +
                                      static_cast<std::size_t>(xx)];
                        }
                    }
                }
                z[(f * H + y) * W + x] = acc;
            }
        }
    }
}

void forward_pass(const CnnModel& m, const double* input, Activations& act) {
    const std::size_t H = m.in_h, W = m.in_w;
    act.z1.assign(kConv1Filters * H * W, 0.0);
    conv_same(input, m.in_channels, H, W, m.conv1_w.data(), m.conv1_b.data(), kConv1Filters,
              act.z1.data());
    act.a1.resize(act.z1.size());
    for (std::size_t i = 0; i < act.z1.size(); ++i) act.a1[i] = std::max(act.z1[i], 0.0);

    act.z2.assign(kConv2Filters * H * W, 0.0);
    conv_same(act.a1.data(), kConv1Filters, H, W, m.conv2_w.data(), m.conv2_b.data(),
              kConv2Filters, act.z2.data());
    act.a2.resize(act.z2.size());
    for (std::size_t i = 0; i < act.z2.size(); ++i) act.a2[i] = std::max(act.z2[i], 0.0);

    const std::size_t ph = m.pool_h(), pw = m.pool_w();
    act.pooled.assign(m.flat(), 0.0);
    for (std::size_t f = 0; f < kConv2Filters; ++f) {
        for (std::size_t py = 0; py < ph; ++py) {
            for (std::size_t px = 0; px < pw; ++px) {
                double s = 0.0;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx)
                        s += act.a2[(f * H + 2 * py + dy) * W + 2 * px + dx];
                act.pooled[(f * ph + py) * pw + px] = s / 4.0;
            }
        }
    }

    act.zfc1.assign(kFc1Units, 0.0);
    for (std::size_t u = 0; u < kFc1Units; ++u) {
        double acc = static_cast<double>(m.fc1_b[u]);
        for (std::size_t i = 0; i < act.pooled.size(); ++i)
            acc += static_cast<double>(m.fc1_w[u * act.pooled.size() + i]) * act.pooled[i];
        act.zfc1[u] = acc;
    }
    act.h.resize(kFc1Units);
    for (std::size_t u = 0; u < kFc1Units; ++u) act.h[u] = std::max(act.zfc1[u], 0.0);

    for (std::size_t o = 0; o < kClasses; ++o) {
        double acc = static_cast<double>(m.fc2_b[o]);
        for (std::size_t u = 0; u < kFc1Units; ++u)
            acc += static_cast<double>(m.fc2_w[o * kFc1Units + u]) * act.h[u];
        act.logits[o] = acc;
    }
    const double mx = std::max(act.logits[0], act.logits[1]);
    const double e0 = std::exp(act.logits[0] - mx);
    const double e1 = std::exp(act.logits[1] - mx);
    act.probs[0] = e0 / (e0 + e1);
    act.probs[1] = e1 / (e0 + e1);
}

std::vector<double> tensor_as_input(const CnnModel& m, const StateTensor& t) {
    if (t.channels != m.in_channels || t.window != m.in_h || t.cells != m.in_w)
        throw ShapeMismatch("tensor " + std::to_string(t.channels) + "x" +
                            std::to_string(t.window) + "x" + std::to_string(t.cells) +
                            " does not match model input " + std::to_string(m.in_channels) + "x" +
                            std::to_string(m.in_h) + "x" + std::to_string(m.in_w));
    std::vector<double> in(t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i) in[i] = static_cast<double>(t.values[i]);
    return in;
}

double ce_loss(const std::array<double, 2>& probs, Label label, double class_weight) {
    const double p = probs[static_cast<std::size_t>(label)];
    return -class_weight * std::log(std::max(p, 1e-300));
}

double backward_pass(const CnnModel& m, const double* input, const Activations& act, Label label,
                     double class_weight, CnnGrads& grads, detail::BackwardFault fault) {
    const std::size_t H = m.in_h, W = m.in_w;
    const std::size_t ph = m.pool_h(), pw = m.pool_w();
    const std::size_t flat = m.flat();
    grads.values.assign(m.param_count(), 0.0);

    // Offsets into the flat gradient vector, matching CnnModel::param order.
    std::size_t off = 0;
    double* g_c1w = grads.values.data() + off; off += m.conv1_w.size();
    double* g_c1b = grads.values.data() + off; off += m.conv1_b.size();
    double* g_c2w = grads.values.data() + off; off += m.conv2_w.size();
    double* g_c2b = grads.values.data() + off; off += m.conv2_b.size();
    double* g_f1w = grads.values.data() + off; off += m.fc1_w.size();
    double* g_f1b = grads.values.data() + off; off += m.fc1_b.size();
    double* g_f2w = grads.values.data() + off; off += m.fc2_w.size();
    double* g_f2b = grads.values.data() + off;

    std::array<double, 2> dlogits{};
    for (std::size_t o = 0; o < kClasses; ++o)
        dlogits[o] = class_weight *
                     (act.probs[o] - (o == static_cast<std::size_t>(label) ? 1.0 : 0.0));

    std::vector<double> dh(kFc1Units, 0.0);
    for (std::size_t o = 0; o < kClasses; ++o) {
        g_f2b[o] = dlogits[o];
        for (std::size_t u = 0; u < kFc1Units; ++u) {
            g_f2w[o * kFc1Units + u] = dlogits[o] * act.h[u];
            dh[u] += dlogits[o] * static_cast<double>(m.fc2_w[o * kFc1Units + u]);
        }
    }

    std::vector<double> dpooled(flat, 0.0);
    for (std::size_t u = 0; u < kFc1Units; ++u) {
        const double dz = act.zfc1[u] > 0.0 ? dh[u] : 0.0;
        g_f1b[u] = dz;
        for (std::size_t i = 0; i < flat; ++i) {
            g_f1w[u * flat + i] = dz * act.pooled[i];
            dpooled[i] += dz * static_cast<double>(m.fc1_w[u * flat + i]);
        }
    }

    std::vector<double> da2(kConv2Filters * H * W, 0.0);
    for (std::size_t f = 0; f < kConv2Filters; ++f)
        for (std::size_t py = 0; py < ph; ++py)
            for (std::size_t px = 0; px < pw; ++px) {
                const double d = dpooled[(f * ph + py) * pw + px] / 4.0;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx)
                        da2[(f * H + 2 * py + dy) * W + 2 * px + dx] += d;
            }

    std::vector<double> dz2(da2.size());
    for (std::size_t i = 0; i < da2.size(); ++i) dz2[i] = act.z2[i] > 0.0 ? da2[i] : 0.0;

    std::vector<double> da1(kConv1Filters * H * W, 0.0);
    for (std::size_t f = 0; f < kConv2Filters; ++f) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                const double d = dz2[(f * H + y) * W + x];
                if (d == 0.0) continue;
                g_c2b[f] += d;
                for (std::size_t c = 0; c < kConv1Filters; ++c) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = static_cast<int>(y) + ky - 1;
                        if (yy < 0 || yy >= static_cast<int>(H)) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = static_cast<int>(x) + kx - 1;
                            if (xx < 0 || xx >= static_cast<int>(W)) continue;
                            const double a =
                                act.a1[(c * H + static_cast<std::size_t>(yy)) * W +
                                       static_cast<std::size_t>(xx)];
                            const std::size_t wi =
                                ((f * kConv1Filters + c) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                static_cast<std::size_t>(kx);
                            g_c2w[wi] += d * a;
                            da1[(c * H + static_cast<std::size_t>(yy)) * W +
                                static_cast<std::size_t>(xx)] +=
                                d * static_cast<double>(m.conv2_w[wi]);
                        }
                    }
                }
            }
        }
    }

    std::vector<double> dz1(da1.size());
    for (std::size_t i = 0; i < da1.size(); ++i) dz1[i] = act.z1[i] > 0.0 ? da1[i] : 0.0;

    const bool transposed = fault == detail::BackwardFault::transposed_conv_kernel;
    for (std::size_t f = 0; f < kConv1Filters; ++f) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                const double d = dz1[(f * H + y) * W + x];
                if (d == 0.0) continue;
                g_c1b[f] += d;
                for (std::size_t c = 0; c < m.in_channels; ++c) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = static_cast<int>(y) + ky - 1;
                        if (yy < 0 || yy >= static_cast<int>(H)) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = static_cast<int>(x) + kx - 1;
                            if (xx < 0 || xx >= static_cast<int>(W)) continue;
                            const double a = input[(c * H + static_cast<std::size_t>(yy)) * W +
                                                   static_cast<std::size_t>(xx)];
                            const std::size_t ki = transposed
                                                       ? (static_cast<std::size_t>(kx)) * 3 +
                                                             static_cast<std::size_t>(ky)
                                                       : (static_cast<std::size_t>(ky)) * 3 +
                                                             static_cast<std::size_t>(kx);
                            g_c1w[(f * m.in_channels + c) * 9 + ki] += d * a;
                        }
                    }
                }
            }
        }
    }

    return ce_loss(act.probs, label, class_weight);
}

} // namespace

std::array<double, 2> cnn_forward(const CnnModel& model, const StateTensor& tensor) {
    const std::vector<double> in = tensor_as_input(model, tensor);
    Activations act;
    forward_pass(model, in.data(), act);
    return act.probs;
}

double cnn_loss_grad(const CnnModel& model, const StateTensor& tensor, Label label,
                     double class_weight, CnnGrads& grads) {
    return detail::cnn_loss_grad_fault(model, tensor, label, class_weight, grads,
                                       detail::BackwardFault::none);
}

namespace detail {

double cnn_loss_grad_fault(const CnnModel& model, const StateTensor& tensor, Label label,
                           double class_weight, CnnGrads& grads, BackwardFault fault) {
    const std::vector<double> in = tensor_as_input(model, tensor);
    Activations act;
    forward_pass(model, in.data(), act);
    return backward_pass(model, in.data(), act, label, class_weight, grads, fault);
}

} // namespace detail

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (lr < 0.0) throw ConfigError("lr must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (class_weights[0] < 0.0 || class_weights[1] < 0.0)
        throw ConfigError("class weights must be >= 0");
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
    TrainConfig c;
    c.epochs = static_cast<int>(kv.get_int("train", "epochs", c.epochs));
    c.batch = static_cast<int>(kv.get_int("train", "batch", c.batch));
    c.lr = kv.get_real("train", "lr", c.lr);
    c.momentum = kv.get_real("train", "momentum", c.momentum);
    c.class_weights[0] = kv.get_real("train", "class_weight_improvement", c.class_weights[0]);
    c.class_weights[1] = kv.get_real("train", "class_weight_deterioration", c.class_weights[1]);
    c.patience = static_cast<int>(kv.get_int("train", "patience", c.patience));
    c.seed = kv.get_u64("train", "seed", c.seed);
    c.validate();
    return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    KvConfig kv = KvConfig::parse_file(path);
    TrainConfig c = from_kv(kv);
    kv.reject_unconsumed();
    return c;
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os << "[train]\n";
    os << "epochs = " << epochs << "\n";
    os << "batch = " << batch << "\n";
    os << "lr = " << format_real(lr) << "\n";
    os << "momentum = " << format_real(momentum) << "\n";
    os << "class_weight_improvement = " << format_real(class_weights[0]) << "\n";
    os << "class_weight_deterioration = " << format_real(class_weights[1]) << "\n";
    os << "patience = " << patience << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

namespace {

std::array<double, 2> effective_class_weights(const TrainConfig& cfg,
                                              const std::vector<LabeledExample>& train) {
    if (cfg.class_weights[0] > 0.0 || cfg.class_weights[1] > 0.0) return cfg.class_weights;
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto& e : train) counts[static_cast<std::size_t>(e.label)] += 1;
    if (counts[0] == 0 || counts[1] == 0) return {1.0, 1.0};
    const double n = static_cast<double>(train.size());
    return {n / (2.0 * static_cast<double>(counts[0])),
            n / (2.0 * static_cast<double>(counts[1]))};
}

// Mean unweighted CE and accuracy over a set; deterministic for any thread
// count (per-chunk partials combined in chunk order).
std::pair<double, double> eval_set(const CnnModel& m, const std::vector<LabeledExample>& set,
                                   int threads) {
    if (set.empty()) return {0.0, 0.0};
    const std::size_t chunk = 64;
    const std::size_t n_chunks = (set.size() + chunk - 1) / chunk;
    std::vector<double> loss_part(n_chunks, 0.0);
    std::vector<std::size_t> hit_part(n_chunks, 0);
    parallel_chunks(set.size(), chunk, threads, [&](std::size_t ci, std::size_t b, std::size_t e) {
        double loss = 0.0;
        std::size_t hits = 0;
        for (std::size_t i = b; i < e; ++i) {
            const auto probs = cnn_forward(m, set[i].tensor);
            loss += ce_loss(probs, set[i].label, 1.0);
            const Label pred = probs[1] > probs[0] ? Label::deterioration : Label::improvement;
            if (pred == set[i].label) ++hits;
        }
        loss_part[ci] = loss;
        hit_part[ci] = hits;
    });
    double loss = 0.0;
    std::size_t hits = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        loss += loss_part[c];
        hits += hit_part[c];
    }
    return {loss / static_cast<double>(set.size()),
            static_cast<double>(hits) / static_cast<double>(set.size())};
}

void sgd_epoch(CnnModel& m, const std::vector<LabeledExample>& train,
               const std::vector<std::size_t>& order, const TrainConfig& cfg,
               const std::array<double, 2>& weights, std::vector<double>& velocity,
               double lr, int threads, double& epoch_loss) {
    const std::size_t n_params = m.param_count();
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
        const std::size_t bs = end - start;

        const std::size_t chunk = 8;
        const std::size_t n_chunks = (bs + chunk - 1) / chunk;
        std::vector<CnnGrads> parts(n_chunks);
        std::vector<double> loss_parts(n_chunks, 0.0);
        parallel_chunks(bs, chunk, threads, [&](std::size_t ci, std::size_t b, std::size_t e) {
            CnnGrads g;
            g.values.assign(n_params, 0.0);
            CnnGrads one;
            double loss = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                const LabeledExample& ex = train[order[start + i]];
                loss += cnn_loss_grad(m, ex.tensor, ex.label,
                                      weights[static_cast<std::size_t>(ex.label)], one);
                for (std::size_t p = 0; p < n_params; ++p) g.values[p] += one.values[p];
            }
            parts[ci] = std::move(g);
            loss_parts[ci] = loss;
        });

        std::vector<double> grad(n_params, 0.0);
        double batch_loss = 0.0;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            for (std::size_t p = 0; p < n_params; ++p) grad[p] += parts[c].values[p];
            batch_loss += loss_parts[c];
        }
        epoch_loss += batch_loss;

        const double scale = 1.0 / static_cast<double>(bs);
        for (std::size_t p = 0; p < n_params; ++p) {
            velocity[p] = cfg.momentum * velocity[p] - lr * grad[p] * scale;
            m.param_set(p, static_cast<float>(m.param_get(p) + velocity[p]));
        }
    }
    epoch_loss /= static_cast<double>(order.size());
}

} // namespace

CnnTrainResult cnn_train(CnnModel model, const SplitDataset& split, const TrainConfig& cfg,
                         int threads) {
    cfg.validate();
    if (split.train.empty()) throw EmptyTrainSet("training split is empty");

    const std::array<double, 2> weights = effective_class_weights(cfg, split.train);
    std::vector<double> velocity(model.param_count(), 0.0);
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    CnnTrainResult result;
    CnnModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    const bool have_val = !split.validation.empty();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        keyed_shuffle(order, KeyedRng(cfg.seed, CH_CNN_SHUFFLE, static_cast<std::uint64_t>(epoch)));
        double train_loss = 0.0;
        sgd_epoch(model, split.train, order, cfg, weights, velocity, cfg.lr, threads, train_loss);

        HistoryRow row;
        row.epoch = epoch;
        row.train_loss = train_loss;
        if (have_val) {
            auto [vl, va] = eval_set(model, split.validation, threads);
            row.val_loss = vl;
            row.val_acc = va;
        } else {
            row.val_loss = train_loss;
            row.val_acc = 0.0;
        }
        result.history.push_back(row);

        if (row.val_loss < best_val - 1e-12) {
            best_val = row.val_loss;
            best = model;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= cfg.patience) break;
        }
    }
    result.model = std::move(best);
    return result;
}

double grad_check(const CnnModel& model, const StateTensor& tensor, Label label, double eps) {
    CnnModel m = model; // perturbed in place
    StateTensor probe = tensor;

    // Nudge the input off ReLU kinks: a pre-activation at exactly (or nearly)
    // zero makes the loss locally non-differentiable.
    for (int tries = 0; tries < 5; ++tries) {
        const std::vector<double> in = tensor_as_input(m, probe);
        Activations act;
        forward_pass(m, in.data(), act);
        double min_abs = std::numeric_limits<double>::infinity();
        for (double z : act.z1) min_abs = std::min(min_abs, std::abs(z));
        for (double z : act.z2) min_abs = std::min(min_abs, std::abs(z));
        for (double z : act.zfc1) min_abs = std::min(min_abs, std::abs(z));
        if (min_abs > 1e-7) break;
        for (auto& v : probe.values) v += 1e-6f;
    }

    CnnGrads analytic;
    cnn_loss_grad(m, probe, label, 1.0, analytic);

    const std::vector<double> in = tensor_as_input(m, probe);
    auto loss_at = [&]() {
        Activations act;
        forward_pass(m, in.data(), act);
        return ce_loss(act.probs, label, 1.0);
    };

    double worst = 0.0;
    const std::size_t n = m.param_count();
    for (std::size_t p = 0; p < n; ++p) {
        const double w0 = m.param_get(p);
        const float wp = static_cast<float>(w0 + eps);
        const float wm = static_cast<float>(w0 - eps);
        m.param_set(p, wp);
        const double lp = loss_at();
        m.param_set(p, wm);
        const double lm = loss_at();
        m.param_set(p, static_cast<float>(w0));
        const double dw = static_cast<double>(wp) - static_cast<double>(wm);
        if (dw == 0.0) continue;
        const double numeric = (lp - lm) / dw;
        const double ga = analytic.values[p];
        const double rel = std::abs(ga - numeric) / std::max(std::abs(ga) + std::abs(numeric), 1e-8);
        worst = std::max(worst, rel);
    }
    return worst;
}

CnnModel online_update(CnnModel model, const std::vector<LabeledExample>& batch,
                       const TrainConfig& cfg, int epochs) {
    cfg.validate();
    if (batch.empty()) throw EmptyInput("online update needs a non-empty batch");
    const std::array<double, 2> weights = effective_class_weights(cfg, batch);
    std::vector<double> velocity(model.param_count(), 0.0);
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const double lr = 0.1 * cfg.lr;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        keyed_shuffle(order, KeyedRng(cfg.seed, CH_CNN_SHUFFLE,
                                      0x10000000ULL + static_cast<std::uint64_t>(epoch)));
        double loss = 0.0;
        sgd_epoch(model, batch, order, cfg, weights, velocity, lr, 1, loss);
    }
    model.version += 1;
    return model;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,val_acc\n";
    for (const auto& r : history)
        os << r.epoch << "," << format_real(r.train_loss) << "," << format_real(r.val_loss) << ","
           << format_real(r.val_acc) << "\n";
    write_text_file(path, os.str());
}

} // namespace netqos
