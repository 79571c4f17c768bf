#include "netqos/cli.hpp"

#include "netqos/analysis.hpp"
#include "netqos/baselines.hpp"
#include "netqos/benchmark.hpp"
#include "netqos/cnn.hpp"
#include "netqos/common.hpp"
#include "netqos/dataset.hpp"
#include "netqos/errors.hpp"
#include "netqos/manifest.hpp"
#include "netqos/model.hpp"
#include "netqos/netsim.hpp"
#include "netqos/policy.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace netqos {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kTraceFiles = {"topology.csv", "meta.csv", "kpi.csv",
                                              "qos.csv",      "tdr.csv",  "mr.csv"};

void write_run_dir(const SimOutput& out, const std::string& dir) {
    fs::create_directories(dir);
    write_trace(out.trace, dir);
    write_ground_truth(out.gt, (fs::path(dir) / "gt.csv").string());
}

std::string trace_fingerprint(const std::string& trace_dir) {
    return hex64(fnv1a64(read_text_file((fs::path(trace_dir) / "kpi.csv").string())));
}

std::string out_ext(const std::string& path) {
    return fs::path(path).extension().string();
}

struct CliState {
    int threads = 1;

    // simulate
    std::string sim_config_path, sim_out;
    std::uint64_t sim_seed = 0;

    // analyze corr
    std::string corr_trace, corr_out;
    std::uint32_t corr_cell = 0;
    CLI::Option* corr_cell_opt = nullptr;

    // analyze cluster
    std::string cluster_trace, cluster_out;
    int cluster_k = 3;
    std::uint64_t cluster_seed = 0;

    // dataset build
    std::string ds_trace, ds_config_path, ds_out;

    // train
    std::string train_algo, train_data, train_config_path, train_ds_config_path, train_out;
    std::uint64_t train_seed = 0;

    // eval
    std::string eval_model, eval_data, eval_split, eval_out;

    // replay
    std::string replay_sim_config, replay_model, replay_out;
    double replay_theta = 0.5;
    std::uint64_t replay_seed = 0;

    // bench
    std::string bench_out;
    bool bench_quick = false;
};

int cmd_simulate(const CliState& st) {
    SimConfig cfg = SimConfig::from_file(st.sim_config_path);
    cfg.seed = st.sim_seed;
    cfg.validate();
    std::cerr << "netqos: simulating " << cfg.n_cells << " cells x " << cfg.n_steps()
              << " steps\n";
    const SimOutput out = simulate(cfg, nullptr, nullptr, st.threads);
    write_run_dir(out, st.sim_out);

    Manifest m;
    m.command = "simulate";
    m.params = {{"seed", std::to_string(st.sim_seed)},
                {"sim_config_hash", hex64(fnv1a64(cfg.to_text()))}};
    std::vector<std::string> files = kTraceFiles;
    files.push_back("gt.csv");
    for (const auto& f : files) add_artifact(m, st.sim_out, f);
    write_manifest(m, st.sim_out);
    std::cerr << "netqos: wrote trace to " << st.sim_out << "\n";
    return 0;
}

int cmd_analyze_corr(const CliState& st) {
    const Trace trace = read_trace(st.corr_trace);
    std::optional<std::uint32_t> scope;
    if (st.corr_cell_opt->count() > 0) scope = st.corr_cell;
    const CorrMatrix matrix = correlation_matrix(trace, scope);
    const HeatmapFormat format =
        out_ext(st.corr_out) == ".svg" ? HeatmapFormat::svg : HeatmapFormat::csv;
    export_heatmap(matrix, st.corr_out, format);

    Manifest m;
    m.command = "analyze corr";
    m.params = {{"cell", scope ? std::to_string(*scope) : "all"},
                {"trace_id", trace_fingerprint(st.corr_trace)}};
    add_artifact_file(m, st.corr_out);
    write_manifest_for_file(m, st.corr_out);
    std::cerr << "netqos: wrote " << st.corr_out << "\n";
    return 0;
}

int cmd_analyze_cluster(const CliState& st) {
    const Trace trace = read_trace(st.cluster_trace);
    const std::vector<TrafficProfile> profiles = traffic_profiles(trace);
    const Clustering clustering = cluster_profiles(profiles, st.cluster_k, st.cluster_seed);
    std::ostringstream os;
    os << "cell_id,cluster\n";
    for (std::size_t i = 0; i < clustering.cell_ids.size(); ++i)
        os << clustering.cell_ids[i] << "," << clustering.assignments[i] << "\n";
    write_text_file(st.cluster_out, os.str());

    Manifest m;
    m.command = "analyze cluster";
    m.params = {{"k", std::to_string(st.cluster_k)},
                {"seed", std::to_string(st.cluster_seed)},
                {"trace_id", trace_fingerprint(st.cluster_trace)}};
    add_artifact_file(m, st.cluster_out);
    write_manifest_for_file(m, st.cluster_out);
    std::cerr << "netqos: wrote " << st.cluster_out << " (purity vs regions "
              << format_real(region_purity(clustering, trace.topology)) << ")\n";
    return 0;
}

int cmd_dataset_build(const CliState& st) {
    const Trace trace = read_trace(st.ds_trace);
    const DatasetConfig cfg = DatasetConfig::from_file(st.ds_config_path);
    DatasetDir dd;
    dd.config = cfg;
    dd.examples = build_examples(trace, cfg, st.threads);
    {
        SplitDataset split = split_examples(dd.examples, cfg);
        dd.stats = standardize_fit(split.train);
    }
    dd.trace_id = trace_fingerprint(st.ds_trace);
    std::set<std::uint32_t> cells;
    for (const auto& e : dd.examples) cells.insert(e.cell_id);
    dd.valid_cells = cells.size();

    fs::create_directories(st.ds_out);
    save_dataset(st.ds_out, dd);

    Manifest m;
    m.command = "dataset build";
    m.params = {{"trace_id", dd.trace_id},
                {"dataset_config_hash", hex64(fnv1a64(cfg.to_text()))}};
    add_artifact(m, st.ds_out, "examples.bin");
    add_artifact(m, st.ds_out, "examples.meta");
    write_manifest(m, st.ds_out);
    std::cerr << "netqos: wrote " << dd.examples.size() << " examples to " << st.ds_out << "\n";
    return 0;
}

int cmd_train(const CliState& st) {
    const ModelKind kind = model_kind_from_name(st.train_algo);
    const bool is_dataset_dir = fs::exists(fs::path(st.train_data) / "examples.bin");

    DatasetConfig ds_cfg;
    ChannelStats stats;
    std::vector<LabeledExample> examples;
    std::string trace_id;
    if (is_dataset_dir) {
        if (!st.train_ds_config_path.empty())
            throw ConfigMismatch("--dataset-config conflicts with a dataset directory, which "
                                 "already carries its config");
        DatasetDir dd = load_dataset(st.train_data);
        ds_cfg = dd.config;
        stats = dd.stats;
        examples = std::move(dd.examples);
        trace_id = dd.trace_id;
    } else {
        const Trace trace = read_trace(st.train_data);
        ds_cfg = st.train_ds_config_path.empty()
                     ? DatasetConfig{}
                     : DatasetConfig::from_file(st.train_ds_config_path);
        examples = build_examples(trace, ds_cfg, st.threads);
        trace_id = trace_fingerprint(st.train_data);
    }
    const TrainConfig train_cfg = st.train_config_path.empty()
                                      ? TrainConfig{}
                                      : TrainConfig::from_file(st.train_config_path);
    const BaselineHyper hyper;
    const SplitDataset split = split_examples(std::move(examples), ds_cfg);

    std::cerr << "netqos: training " << st.train_algo << " on " << split.train.size()
              << " examples\n";
    const TrainedModel tm =
        train_model(kind, split, ds_cfg, stats, train_cfg, hyper, st.train_seed, st.threads);
    save_model(st.train_out, tm.model);
    const std::string history_path =
        (fs::path(st.train_out).parent_path() / "history.csv").string();
    write_history_csv(tm.history, history_path);

    Manifest m;
    m.command = "train";
    m.params = {{"algo", st.train_algo},
                {"seed", std::to_string(st.train_seed)},
                {"trace_id", trace_id},
                {"dataset_config_hash", hex64(fnv1a64(ds_cfg.to_text()))},
                {"train_config_hash", hex64(fnv1a64(train_cfg.to_text()))}};
    add_artifact_file(m, st.train_out);
    add_artifact_file(m, history_path);
    write_manifest_for_file(m, st.train_out);
    std::cerr << "netqos: wrote " << st.train_out << "\n";
    return 0;
}

int cmd_eval(const CliState& st) {
    const Model model = load_model(st.eval_model);
    DatasetDir dd = load_dataset(st.eval_data);
    if (dd.config.to_text() != model.ds_config.to_text())
        throw ConfigMismatch("the dataset's config differs from the one the model was trained "
                             "with (hash " +
                             hex64(fnv1a64(dd.config.to_text())) + " vs " +
                             hex64(model.config_hash) + ")");
    const SplitDataset split = split_examples(std::move(dd.examples), dd.config);
    const auto& part = st.eval_split == "validation" ? split.validation : split.test;
    const Metrics metrics = evaluate(model, part, st.threads);
    write_text_file(st.eval_out, metrics_csv(metrics));

    Manifest m;
    m.command = "eval";
    m.params = {{"split", st.eval_split},
                {"model_kind", model_kind_name(model.kind)},
                {"model_config_hash", hex64(model.config_hash)},
                {"trace_id", dd.trace_id}};
    add_artifact_file(m, st.eval_out);
    write_manifest_for_file(m, st.eval_out);
    std::cerr << "netqos: " << st.eval_split << " accuracy " << format_real(metrics.accuracy)
              << " over " << metrics.n << " examples\n";
    return 0;
}

int cmd_replay(const CliState& st) {
    SimConfig cfg = SimConfig::from_file(st.replay_sim_config);
    cfg.seed = st.replay_seed;
    cfg.validate();
    const Model model = load_model(st.replay_model);
    PolicyConfig pc;
    pc.theta = st.replay_theta;
    pc.horizon = model.ds_config.horizon;

    std::cerr << "netqos: replaying theta=" << format_real(pc.theta) << "\n";
    const ReplayResult rr = replay(cfg, model, pc, st.threads);

    fs::create_directories(st.replay_out);
    write_run_dir(rr.baseline, (fs::path(st.replay_out) / "baseline").string());
    write_run_dir(rr.policy, (fs::path(st.replay_out) / "policy").string());
    write_report_csv(rr.report, (fs::path(st.replay_out) / "report.csv").string());
    emit_delay_comparison(rr.report, (fs::path(st.replay_out) / "comparison.csv").string(),
                          ComparisonFormat::csv);
    emit_delay_comparison(rr.report, (fs::path(st.replay_out) / "comparison.svg").string(),
                          ComparisonFormat::svg);

    Manifest m;
    m.command = "replay";
    m.params = {{"seed", std::to_string(st.replay_seed)},
                {"theta", format_real(pc.theta)},
                {"sim_config_hash", hex64(fnv1a64(cfg.to_text()))},
                {"model_kind", model_kind_name(model.kind)},
                {"model_config_hash", hex64(model.config_hash)}};
    std::vector<std::string> run_files = kTraceFiles;
    run_files.push_back("gt.csv");
    for (const auto& f : run_files) add_artifact(m, st.replay_out, "baseline/" + f);
    for (const auto& f : run_files) add_artifact(m, st.replay_out, "policy/" + f);
    for (const char* f : {"report.csv", "comparison.csv", "comparison.svg"})
        add_artifact(m, st.replay_out, f);
    write_manifest(m, st.replay_out);

    std::cerr << "netqos: mean delay baseline " << format_real(rr.report.baseline.mean_delay_ms)
              << " ms, policy " << format_real(rr.report.policy.mean_delay_ms) << " ms\n";
    return 0;
}

int cmd_bench(const CliState& st) {
    BenchOptions opt;
    opt.out_dir = st.bench_out;
    opt.quick = st.bench_quick;
    opt.threads = st.threads;
    const BenchResult result = run_bench(opt);
    std::cout << result.summary_table;
    return 0;
}

std::string require_ext(const std::string& allowed_desc,
                        const std::vector<std::string>& allowed, const std::string& value) {
    const std::string ext = out_ext(value);
    for (const auto& a : allowed)
        if (ext == a) return {};
    return "output path must end in " + allowed_desc;
}

} // namespace

int run(int argc, const char* const* argv) {
    CliState st;
    CLI::App app{"Mobile-network QoS cognition toolkit: synthetic telemetry, KPI analysis, "
                 "QoS-change classifiers, and admission-policy replay"};
    app.require_subcommand(1);
    app.add_option("--threads", st.threads, "worker threads (results are thread-count invariant)")
        ->default_val(1)
        ->check(CLI::Range(1, 256));

    auto* sim = app.add_subcommand("simulate", "generate a synthetic telemetry trace");
    sim->add_option("--config", st.sim_config_path, "simulation config file")->required();
    sim->add_option("--seed", st.sim_seed, "rng seed")->required();
    sim->add_option("--out", st.sim_out, "output trace directory")->required();

    auto* analyze = app.add_subcommand("analyze", "cognition statistics over a trace");
    analyze->require_subcommand(1);
    auto* corr = analyze->add_subcommand("corr", "KPI Pearson correlation matrix");
    corr->add_option("--trace", st.corr_trace, "trace directory")->required();
    st.corr_cell_opt = corr->add_option("--cell", st.corr_cell, "restrict to one cell");
    corr->add_option("--out", st.corr_out, "heatmap output (.csv or .svg)")
        ->required()
        ->check(CLI::Validator(
            [](std::string& v) { return require_ext(".csv or .svg", {".csv", ".svg"}, v); },
            "EXT"));

    auto* cluster = analyze->add_subcommand("cluster", "k-means over traffic profiles");
    cluster->add_option("--trace", st.cluster_trace, "trace directory")->required();
    cluster->add_option("--k", st.cluster_k, "cluster count")->required()->check(CLI::Range(1, 4096));
    cluster->add_option("--seed", st.cluster_seed, "rng seed")->required();
    cluster->add_option("--out", st.cluster_out, "assignments csv")
        ->required()
        ->check(CLI::Validator([](std::string& v) { return require_ext(".csv", {".csv"}, v); },
                               "EXT"));

    auto* dataset = app.add_subcommand("dataset", "labeled example construction");
    dataset->require_subcommand(1);
    auto* build = dataset->add_subcommand("build", "build tensors + labels from a trace");
    build->add_option("--trace", st.ds_trace, "trace directory")->required();
    build->add_option("--config", st.ds_config_path, "dataset config file")->required();
    build->add_option("--out", st.ds_out, "output dataset directory")->required();

    auto* train = app.add_subcommand("train", "train a classifier");
    train->add_option("--algo", st.train_algo, "model kind")
        ->required()
        ->check(CLI::IsMember({"cnn", "knn", "svm", "dt", "gbm"}));
    train->add_option("--data", st.train_data, "dataset directory (or trace directory)")
        ->required();
    train->add_option("--train-config", st.train_config_path, "training config file");
    train->add_option("--dataset-config", st.train_ds_config_path,
                      "dataset config when --data is a trace directory");
    train->add_option("--seed", st.train_seed, "rng seed")->required();
    train->add_option("--out", st.train_out, "model output file")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a model on a dataset split");
    eval->add_option("--model", st.eval_model, "model file")->required();
    eval->add_option("--data", st.eval_data, "dataset directory")->required();
    eval->add_option("--split", st.eval_split, "which split")
        ->required()
        ->check(CLI::IsMember({"test", "validation"}));
    eval->add_option("--out", st.eval_out, "metrics csv")
        ->required()
        ->check(CLI::Validator([](std::string& v) { return require_ext(".csv", {".csv"}, v); },
                               "EXT"));

    auto* rep = app.add_subcommand("replay", "coupled baseline/policy admission replay");
    rep->add_option("--sim-config", st.replay_sim_config, "simulation config file")->required();
    rep->add_option("--model", st.replay_model, "model file")->required();
    rep->add_option("--theta", st.replay_theta, "rejection threshold")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    rep->add_option("--seed", st.replay_seed, "rng seed")->required();
    rep->add_option("--out", st.replay_out, "output directory")->required();

    auto* bench = app.add_subcommand("bench", "standard end-to-end benchmark");
    bench->add_option("--out", st.bench_out, "results directory")->required();
    bench->add_flag("--quick", st.bench_quick, "reduced grid for smoke runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(st);
        if (analyze->parsed()) {
            if (corr->parsed()) return cmd_analyze_corr(st);
            if (cluster->parsed()) return cmd_analyze_cluster(st);
        }
        if (dataset->parsed() && build->parsed()) return cmd_dataset_build(st);
        if (train->parsed()) return cmd_train(st);
        if (eval->parsed()) return cmd_eval(st);
        if (rep->parsed()) return cmd_replay(st);
        if (bench->parsed()) return cmd_bench(st);
    } catch (const Error& e) {
        std::cerr << "netqos: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "netqos: error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace netqos
