#include "netqos/model.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace netqos {

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::cnn: return "cnn";
    case ModelKind::knn: return "knn";
    case ModelKind::svm: return "svm";
    case ModelKind::dt: return "dt";
    case ModelKind::gbm: return "gbm";
    }
    return "cnn";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "cnn") return ModelKind::cnn;
    if (name == "knn") return ModelKind::knn;
    if (name == "svm") return ModelKind::svm;
    if (name == "dt") return ModelKind::dt;
    if (name == "gbm") return ModelKind::gbm;
    throw KindUnsupported("unknown model kind '" + name + "'");
}

Prediction model_predict(const Model& model, const StateTensor& raw) {
    if (raw.channels != model.ds_config.n_channels() ||
        raw.window != static_cast<std::size_t>(model.ds_config.window) ||
        raw.cells != model.ds_config.n_cell_slots())
        throw ShapeMismatch("input tensor geometry disagrees with the model's dataset config");
    StateTensor t = raw;
    standardize_apply(t, model.stats);
    switch (model.kind) {
    case ModelKind::cnn: {
        const auto probs = cnn_forward(model.cnn, t);
        Prediction pred;
        pred.p_deteriorate = probs[1];
        pred.label = probs[1] > probs[0] ? Label::deterioration : Label::improvement;
        return pred;
    }
    case ModelKind::knn: return knn_predict(model.knn, feature_vector(t));
    case ModelKind::svm: return svm_predict(model.svm, feature_vector(t));
    case ModelKind::dt: return dt_predict(model.dt, feature_vector(t));
    case ModelKind::gbm: return gbm_predict(model.gbm, feature_vector(t));
    }
    throw KindUnsupported("unreachable model kind");
}

Metrics evaluate(const Model& model, const std::vector<LabeledExample>& raw_examples,
                 int threads) {
    if (raw_examples.empty()) throw EmptyInput("no examples to evaluate");
    const std::size_t n = raw_examples.size();
    const std::size_t chunk_size = 256;
    std::vector<std::array<std::array<std::size_t, 2>, 2>> partials((n + chunk_size - 1) /
                                                                    chunk_size);
    parallel_chunks(n, chunk_size, threads, [&](std::size_t chunk, std::size_t begin,
                                                std::size_t end) {
        std::array<std::array<std::size_t, 2>, 2> c{};
        for (std::size_t i = begin; i < end; ++i) {
            const Prediction p = model_predict(model, raw_examples[i].tensor);
            ++c[static_cast<std::size_t>(raw_examples[i].label)][static_cast<std::size_t>(p.label)];
        }
        partials[chunk] = c;
    });

    Metrics m;
    m.n = n;
    for (const auto& c : partials)
        for (int a = 0; a < 2; ++a)
            for (int q = 0; q < 2; ++q) m.confusion[a][q] += c[a][q];
    const std::size_t correct = m.confusion[0][0] + m.confusion[1][1];
    m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    for (int k = 0; k < 2; ++k) {
        const std::size_t predicted = m.confusion[0][k] + m.confusion[1][k];
        const std::size_t actual = m.confusion[k][0] + m.confusion[k][1];
        m.precision[k] = predicted
                             ? static_cast<double>(m.confusion[k][k]) / static_cast<double>(predicted)
                             : 0.0;
        m.recall[k] =
            actual ? static_cast<double>(m.confusion[k][k]) / static_cast<double>(actual) : 0.0;
    }
    return m;
}

std::string metrics_csv(const Metrics& m) {
    std::ostringstream os;
    os << "metric,value\n";
    os << "examples," << m.n << "\n";
    os << "accuracy," << format_real(m.accuracy) << "\n";
    for (int k = 0; k < 2; ++k) {
        const char* cls = label_name(static_cast<Label>(k));
        os << "precision_" << cls << "," << format_real(m.precision[k]) << "\n";
        os << "recall_" << cls << "," << format_real(m.recall[k]) << "\n";
    }
    for (int a = 0; a < 2; ++a)
        for (int q = 0; q < 2; ++q)
            os << "confusion_" << label_name(static_cast<Label>(a)) << "_"
               << label_name(static_cast<Label>(q)) << "," << m.confusion[a][q] << "\n";
    return os.str();
}

TrainedModel train_model(ModelKind kind, const SplitDataset& split, const DatasetConfig& ds_config,
                         const ChannelStats& stats, const TrainConfig& train_config,
                         const BaselineHyper& hyper, std::uint64_t seed, int threads) {
    if (split.train.empty()) throw EmptyTrainSet("training split is empty");

    TrainedModel out;
    Model& m = out.model;
    m.kind = kind;
    m.ds_config = ds_config;
    m.train_seed = seed;
    m.config_hash = fnv1a64(ds_config.to_text());
    m.stats = stats.empty() ? standardize_fit(split.train) : stats;

    std::vector<LabeledExample> train = split.train;
    std::vector<LabeledExample> validation = split.validation;
    standardize_apply(train, m.stats);
    standardize_apply(validation, m.stats);

    if (kind == ModelKind::cnn) {
        const StateTensor& t0 = train.front().tensor;
        TrainConfig cfg = train_config;
        cfg.seed = seed;
        cfg.validate();
        SplitDataset std_split;
        std_split.train = std::move(train);
        std_split.validation = std::move(validation);
        CnnTrainResult res =
            cnn_train(cnn_init(t0.channels, t0.window, t0.cells, seed), std_split, cfg, threads);
        m.cnn = std::move(res.model);
        out.history = std::move(res.history);
        m.train_epochs = static_cast<std::uint32_t>(out.history.size());
        return out;
    }

    std::vector<std::vector<double>> x(train.size());
    std::vector<Label> y(train.size());
    parallel_for(train.size(), threads, [&](std::size_t i) {
        x[i] = feature_vector(train[i].tensor);
        y[i] = train[i].label;
    });
    switch (kind) {
    case ModelKind::knn:
        m.knn = knn_train(x, y, hyper);
        break;
    case ModelKind::svm:
        m.svm = svm_train(x, y, hyper, seed);
        m.train_epochs = static_cast<std::uint32_t>(hyper.svm_epochs);
        break;
    case ModelKind::dt:
        m.dt = dt_train(x, y, hyper);
        break;
    case ModelKind::gbm:
        m.gbm = gbm_train(x, y, hyper);
        m.train_epochs = static_cast<std::uint32_t>(m.gbm.stages.size());
        break;
    case ModelKind::cnn:
        break;
    }
    return out;
}

namespace {

constexpr const char* kMagicLine = "NQOS-MODEL v1";

struct BlobWriter {
    std::string bytes;

    void u8(std::uint8_t v) { bytes.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

struct BlobReader {
    const std::string& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw MalformedRow(path, 0, "parameter blob truncated");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[pos + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos += 8;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
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

void write_tree(BlobWriter& w, const std::vector<TreeNode>& nodes) {
    w.u32(static_cast<std::uint32_t>(nodes.size()));
    for (const TreeNode& n : nodes) {
        w.i32(n.feature);
        w.f32(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.f64(n.value);
    }
}

std::vector<TreeNode> read_tree(BlobReader& r) {
    const std::uint32_t count = r.u32();
    if (count == 0) throw MalformedRow(r.path, 0, "empty tree");
    std::vector<TreeNode> nodes(count);
    for (auto& n : nodes) {
        n.feature = r.i32();
        n.threshold = r.f32();
        n.left = r.i32();
        n.right = r.i32();
        n.value = r.f64();
        const bool leaf = n.feature < 0;
        const bool interior = n.left >= 0 && n.left < static_cast<int>(count) && n.right >= 0 &&
                              n.right < static_cast<int>(count);
        if (!leaf && !interior) throw MalformedRow(r.path, 0, "tree child index out of range");
    }
    return nodes;
}

} // namespace

void save_model(const std::string& path, const Model& model) {
    BlobWriter blob;
    switch (model.kind) {
    case ModelKind::cnn: {
        const CnnModel& c = model.cnn;
        blob.u32(static_cast<std::uint32_t>(c.in_channels));
        blob.u32(static_cast<std::uint32_t>(c.in_h));
        blob.u32(static_cast<std::uint32_t>(c.in_w));
        blob.u32(c.version);
        for (std::size_t i = 0; i < c.param_count(); ++i) blob.f32(c.param_get(i));
        break;
    }
    case ModelKind::knn: {
        const KnnModel& k = model.knn;
        blob.u32(static_cast<std::uint32_t>(k.k));
        blob.u64(k.size());
        blob.u32(static_cast<std::uint32_t>(k.dim));
        for (double v : k.points) blob.f64(v);
        for (Label l : k.labels) blob.u8(static_cast<std::uint8_t>(l));
        break;
    }
    case ModelKind::svm: {
        blob.u32(static_cast<std::uint32_t>(model.svm.w.size()));
        for (double v : model.svm.w) blob.f32(static_cast<float>(v));
        blob.f32(static_cast<float>(model.svm.b));
        break;
    }
    case ModelKind::dt:
        write_tree(blob, model.dt.nodes);
        break;
    case ModelKind::gbm: {
        const GbmModel& g = model.gbm;
        blob.f64(g.base_score);
        blob.f64(g.shrinkage);
        blob.u32(static_cast<std::uint32_t>(g.stages.size()));
        for (const auto& tree : g.stages) write_tree(blob, tree);
        for (double v : g.train_loss) blob.f64(v);
        break;
    }
    }

    std::ostringstream os;
    os << kMagicLine << "\n";
    os << "[model]\n";
    os << "kind = " << model_kind_name(model.kind) << "\n";
    os << "train_seed = " << model.train_seed << "\n";
    os << "train_epochs = " << model.train_epochs << "\n";
    os << "config_hash = " << hex64(model.config_hash) << "\n";
    os << model.ds_config.to_text();
    os << "[stats]\n";
    os << "mean = " << stats_csv(model.stats.mean) << "\n";
    os << "stddev = " << stats_csv(model.stats.stddev) << "\n";
    os << "constant = ";
    for (std::size_t i = 0; i < model.stats.constant.size(); ++i)
        os << (i ? "," : "") << static_cast<int>(model.stats.constant[i]);
    os << "\n";
    os << "blob " << blob.bytes.size() << "\n";
    os << blob.bytes;
    write_text_file(path, os.str());
}

Model load_model(const std::string& path) {
    const std::string file = read_text_file(path);

    // Split the text header from the parameter blob at the "blob <n>" line.
    std::size_t pos = 0;
    std::string header;
    std::size_t blob_bytes = 0;
    bool have_blob = false;
    int line_no = 0;
    while (pos < file.size()) {
        std::size_t eol = file.find('\n', pos);
        if (eol == std::string::npos) eol = file.size();
        const std::string line = file.substr(pos, eol - pos);
        ++line_no;
        if (line_no == 1) {
            if (line != kMagicLine) throw MalformedRow(path, 1, "bad model file magic");
        } else if (line.rfind("blob ", 0) == 0) {
            char* end = nullptr;
            const unsigned long long n = std::strtoull(line.c_str() + 5, &end, 10);
            if (end == nullptr || *end != '\0')
                throw MalformedRow(path, line_no, "malformed blob size");
            blob_bytes = static_cast<std::size_t>(n);
            have_blob = true;
            pos = eol + 1;
            break;
        } else {
            header += line;
            header += "\n";
        }
        pos = eol + 1;
    }
    if (!have_blob) throw MalformedRow(path, line_no, "missing blob section");
    if (file.size() - pos != blob_bytes)
        throw MalformedRow(path, line_no, "blob size disagrees with file length");
    const std::string blob = file.substr(pos);

    KvConfig kv = KvConfig::parse(header, path);
    Model m;
    m.kind = model_kind_from_name(kv.get_string("model", "kind"));
    m.train_seed = kv.get_u64("model", "train_seed", 0);
    m.train_epochs = static_cast<std::uint32_t>(kv.get_int("model", "train_epochs", 0));
    const std::string hash_text = kv.get_string("model", "config_hash");
    m.stats.mean = parse_stats_csv(kv.get_string("stats", "mean"));
    m.stats.stddev = parse_stats_csv(kv.get_string("stats", "stddev"));
    for (const auto& part : split_string(kv.get_string("stats", "constant"), ','))
        m.stats.constant.push_back(static_cast<std::uint8_t>(std::stoi(trim(part))));
    m.ds_config = DatasetConfig::from_kv(kv);
    kv.reject_unconsumed();

    m.config_hash = fnv1a64(m.ds_config.to_text());
    if (hex64(m.config_hash) != hash_text)
        throw MalformedRow(path, 0, "config hash disagrees with the stored dataset config");
    if (m.stats.mean.size() != m.ds_config.n_channels() ||
        m.stats.stddev.size() != m.stats.mean.size() ||
        m.stats.constant.size() != m.stats.mean.size())
        throw MalformedRow(path, 0, "channel stats length disagrees with the dataset config");

    BlobReader r{blob, 0, path};
    switch (m.kind) {
    case ModelKind::cnn: {
        const std::uint32_t in_c = r.u32();
        const std::uint32_t in_h = r.u32();
        const std::uint32_t in_w = r.u32();
        const std::uint32_t version = r.u32();
        CnnModel c = cnn_init(in_c, in_h, in_w, 0);
        c.version = version;
        for (std::size_t i = 0; i < c.param_count(); ++i) c.param_set(i, r.f32());
        m.cnn = std::move(c);
        break;
    }
    case ModelKind::knn: {
        KnnModel k;
        k.k = static_cast<int>(r.u32());
        const std::uint64_t n = r.u64();
        k.dim = r.u32();
        if (k.k < 1 || n == 0 || k.dim == 0 || static_cast<std::uint64_t>(k.k) > n)
            throw MalformedRow(path, 0, "inconsistent knn header");
        k.points.resize(static_cast<std::size_t>(n) * k.dim);
        for (auto& v : k.points) v = r.f64();
        k.labels.resize(static_cast<std::size_t>(n));
        for (auto& l : k.labels) {
            const std::uint8_t b = r.u8();
            if (b > 1) throw MalformedRow(path, 0, "knn label out of range");
            l = static_cast<Label>(b);
        }
        m.knn = std::move(k);
        break;
    }
    case ModelKind::svm: {
        const std::uint32_t dim = r.u32();
        m.svm.w.resize(dim);
        for (auto& v : m.svm.w) v = static_cast<double>(r.f32());
        m.svm.b = static_cast<double>(r.f32());
        break;
    }
    case ModelKind::dt:
        m.dt.nodes = read_tree(r);
        break;
    case ModelKind::gbm: {
        m.gbm.base_score = r.f64();
        m.gbm.shrinkage = r.f64();
        const std::uint32_t stages = r.u32();
        m.gbm.stages.resize(stages);
        for (auto& tree : m.gbm.stages) tree = read_tree(r);
        m.gbm.train_loss.resize(stages);
        for (auto& v : m.gbm.train_loss) v = r.f64();
        break;
    }
    }
    if (r.pos != blob.size()) throw MalformedRow(path, 0, "trailing bytes after parameter blob");
    return m;
}

} // namespace netqos
