#include "netqos/benchmark.hpp"

#include "netqos/analysis.hpp"
#include "netqos/common.hpp"
#include "netqos/errors.hpp"
#include "netqos/manifest.hpp"
#include "netqos/policy.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

namespace netqos {

namespace {

std::vector<std::uint32_t> work_cell_ids(const SimConfig& cfg) {
    std::vector<std::uint32_t> ids;
    const Topology topo = cfg.build_topology();
    for (std::uint32_t i = 0; i < cfg.n_cells; ++i)
        if (cfg.region_of(i) == RegionType::work) ids.push_back(topo.cells[i].cell_id);
    return ids;
}

} // namespace

SimConfig benchmark_sim_config() {
    SimConfig c;
    c.n_cells = 77;
    c.days = 5;
    c.step_minutes = 15;
    c.start_dow = 4; // Friday start puts a full weekend inside the horizon
    c.users_per_cell = 34.0;
    c.low_priority_fraction = 0.7;
    c.seed = 42;
    return c;
}

SimConfig benchmark_congested_config() {
    SimConfig c = benchmark_sim_config();
    Event e;
    e.cell_ids = work_cell_ids(c);
    // Monday is simulated day 3 of a Friday start; 10:00-16:00.
    e.start_ts = 3 * 1440 + 600;
    e.end_ts = 3 * 1440 + 960;
    e.load_multiplier = 3.0;
    c.events.push_back(e);
    return c;
}

DatasetConfig benchmark_dataset_config() { return DatasetConfig{}; }

TrainConfig benchmark_train_config() {
    TrainConfig t;
    t.epochs = 18;
    t.batch = 64;
    t.lr = 0.05;
    t.momentum = 0.9;
    t.patience = 4;
    return t;
}

BaselineHyper benchmark_hyper() { return BaselineHyper{}; }

SimConfig quick_sim_config() {
    SimConfig c = benchmark_sim_config();
    c.n_cells = 12;
    c.days = 2;
    return c;
}

SimConfig quick_congested_config() {
    SimConfig c = quick_sim_config();
    Event e;
    e.cell_ids = work_cell_ids(c);
    // Saturday is simulated day 1 of a Friday start; 10:00-16:00.
    e.start_ts = 1 * 1440 + 600;
    e.end_ts = 1 * 1440 + 960;
    e.load_multiplier = 3.0;
    c.events.push_back(e);
    return c;
}

namespace {

namespace fs = std::filesystem;

struct ArtifactLog {
    std::string root;
    std::vector<std::string> rel_paths;

    void note(const std::string& rel) { rel_paths.push_back(rel); }
    void note_dir_files(const std::string& rel_dir, const std::vector<std::string>& names) {
        for (const auto& n : names) note(rel_dir + "/" + n);
    }
};

const std::vector<std::string> kTraceFiles = {"topology.csv", "meta.csv", "kpi.csv",
                                              "qos.csv",      "tdr.csv",  "mr.csv"};

void write_run_dir(const SimOutput& out, const std::string& dir) {
    fs::create_directories(dir);
    write_trace(out.trace, dir);
    write_ground_truth(out.gt, (fs::path(dir) / "gt.csv").string());
}

Manifest dir_manifest(const std::string& command, const std::string& dir,
                      const std::vector<std::pair<std::string, std::string>>& params,
                      const std::vector<std::string>& rel_files) {
    Manifest m;
    m.command = command;
    m.params = params;
    for (const auto& rel : rel_files) add_artifact(m, dir, rel);
    return m;
}

double safe_ratio(double num, double den) { return den > 1e-12 ? num / den : 0.0; }

} // namespace

BenchResult run_bench(const BenchOptions& options) {
    if (options.out_dir.empty()) throw ConfigError("bench requires an output directory");
    const SimConfig sim_cfg = options.quick ? quick_sim_config() : benchmark_sim_config();
    const SimConfig congested_cfg =
        options.quick ? quick_congested_config() : benchmark_congested_config();
    const DatasetConfig ds_cfg = benchmark_dataset_config();
    TrainConfig train_cfg = benchmark_train_config();
    BaselineHyper hyper = benchmark_hyper();
    if (options.quick) {
        train_cfg.epochs = 3;
        hyper.gbm_stages = 30;
    }
    const std::uint64_t seed = sim_cfg.seed;
    const int threads = options.threads;

    const std::string root = options.out_dir;
    fs::create_directories(root);
    ArtifactLog all{root, {}};

    // --- simulate ---------------------------------------------------------
    std::cerr << "[bench] simulating " << sim_cfg.n_cells << " cells x " << sim_cfg.n_steps()
              << " steps\n";
    const SimOutput sim = simulate(sim_cfg, nullptr, nullptr, threads);
    const std::string trace_dir = (fs::path(root) / "trace").string();
    write_run_dir(sim, trace_dir);
    {
        std::vector<std::string> files = kTraceFiles;
        files.push_back("gt.csv");
        Manifest m = dir_manifest("simulate", trace_dir,
                                  {{"seed", std::to_string(seed)},
                                   {"sim_config_hash", hex64(fnv1a64(sim_cfg.to_text()))}},
                                  files);
        write_manifest(m, trace_dir);
        all.note_dir_files("trace", files);
        all.note("trace/manifest.json");
    }

    // --- analysis ---------------------------------------------------------
    std::cerr << "[bench] correlation + clustering\n";
    const std::string analysis_dir = (fs::path(root) / "analysis").string();
    fs::create_directories(analysis_dir);
    const CorrMatrix corr = correlation_matrix(sim.trace, std::nullopt);
    export_heatmap(corr, (fs::path(analysis_dir) / "heatmap.csv").string(), HeatmapFormat::csv);
    export_heatmap(corr, (fs::path(analysis_dir) / "heatmap.svg").string(), HeatmapFormat::svg);

    const std::vector<TrafficProfile> profiles = traffic_profiles(sim.trace);
    const Clustering clustering = cluster_profiles(profiles, 3, seed);
    {
        std::ostringstream os;
        os << "cell_id,cluster\n";
        for (std::size_t i = 0; i < clustering.cell_ids.size(); ++i)
            os << clustering.cell_ids[i] << "," << clustering.assignments[i] << "\n";
        write_text_file((fs::path(analysis_dir) / "clusters.csv").string(), os.str());
    }
    BenchResult result;
    result.cluster_purity = region_purity(clustering, sim.trace.topology);
    result.cluster_inertia_history = clustering.inertia_history;

    // True-load weekend/weekday means per region, from ground truth.
    {
        double sums[3][2] = {};
        std::uint64_t counts[3][2] = {};
        const std::size_t n_steps = sim.gt.timestamps.size();
        for (std::size_t c = 0; c < sim.gt.cell_ids.size(); ++c) {
            const int region = static_cast<int>(sim_cfg.region_of(static_cast<std::uint32_t>(c)));
            for (std::size_t s = 0; s < n_steps; ++s) {
                const int wk = is_weekend(sim.trace.day_of_week(sim.gt.timestamps[s])) ? 1 : 0;
                sums[region][wk] += sim.gt.at(c, s).offered_load;
                ++counts[region][wk];
            }
        }
        const auto mean = [&](RegionType r, int wk) {
            const int ri = static_cast<int>(r);
            return counts[ri][wk] ? sums[ri][wk] / static_cast<double>(counts[ri][wk]) : 0.0;
        };
        result.leisure_weekend_over_weekday =
            safe_ratio(mean(RegionType::leisure, 1), mean(RegionType::leisure, 0));
        result.work_weekend_over_weekday =
            safe_ratio(mean(RegionType::work, 1), mean(RegionType::work, 0));
    }
    {
        Manifest m = dir_manifest("analyze", analysis_dir,
                                  {{"seed", std::to_string(seed)},
                                   {"k", "3"},
                                   {"sim_config_hash", hex64(fnv1a64(sim_cfg.to_text()))}},
                                  {"heatmap.csv", "heatmap.svg", "clusters.csv"});
        write_manifest(m, analysis_dir);
        all.note_dir_files("analysis", {"heatmap.csv", "heatmap.svg", "clusters.csv"});
        all.note("analysis/manifest.json");
    }

    // --- dataset ----------------------------------------------------------
    std::cerr << "[bench] building labeled examples\n";
    DatasetDir dd;
    dd.examples = build_examples(sim.trace, ds_cfg, threads);
    dd.config = ds_cfg;
    {
        SplitDataset split = split_examples(dd.examples, ds_cfg);
        dd.stats = standardize_fit(split.train);
    }
    dd.trace_id = hex64(fnv1a64(read_text_file((fs::path(trace_dir) / "kpi.csv").string())));
    {
        std::set<std::uint32_t> cells;
        for (const auto& e : dd.examples) cells.insert(e.cell_id);
        dd.valid_cells = cells.size();
    }
    const std::string dataset_dir = (fs::path(root) / "dataset").string();
    fs::create_directories(dataset_dir);
    save_dataset(dataset_dir, dd);
    {
        Manifest m = dir_manifest("dataset", dataset_dir,
                                  {{"trace_id", dd.trace_id},
                                   {"dataset_config_hash", hex64(fnv1a64(ds_cfg.to_text()))}},
                                  {"examples.bin", "examples.meta"});
        write_manifest(m, dataset_dir);
        all.note_dir_files("dataset", {"examples.bin", "examples.meta"});
        all.note("dataset/manifest.json");
    }
    result.examples = dd.examples.size();
    result.deterioration_fraction = class_balance(dd.examples).deterioration_fraction();

    std::cerr << "[bench] oracle accuracy\n";
    result.bayes_accuracy = oracle_bayes_accuracy(sim.trace, sim.gt, sim_cfg, ds_cfg);

    // --- train + eval all five kinds --------------------------------------
    const std::string models_dir = (fs::path(root) / "models").string();
    fs::create_directories(models_dir);
    const SplitDataset split = split_examples(dd.examples, ds_cfg);
    Model cnn_model;
    std::vector<std::string> model_files;
    for (const ModelKind kind :
         {ModelKind::cnn, ModelKind::knn, ModelKind::svm, ModelKind::dt, ModelKind::gbm}) {
        const std::string name = model_kind_name(kind);
        std::cerr << "[bench] training " << name << "\n";
        TrainedModel tm = train_model(kind, split, ds_cfg, dd.stats, train_cfg, hyper, seed,
                                      threads);
        const std::string model_file = name + std::string(".nqm");
        save_model((fs::path(models_dir) / model_file).string(), tm.model);
        model_files.push_back(model_file);
        if (kind == ModelKind::cnn) {
            write_history_csv(tm.history, (fs::path(models_dir) / "history.csv").string());
            model_files.push_back("history.csv");
            cnn_model = tm.model;
        }
        const Metrics metrics = evaluate(tm.model, split.test, threads);
        const std::string eval_file = "eval_" + std::string(name) + ".csv";
        write_text_file((fs::path(models_dir) / eval_file).string(), metrics_csv(metrics));
        model_files.push_back(eval_file);
        result.algos.push_back({kind, metrics.accuracy});
        if (kind == ModelKind::cnn)
            result.cnn_accuracy = metrics.accuracy;
        else
            result.best_baseline_accuracy =
                std::max(result.best_baseline_accuracy, metrics.accuracy);
        std::cerr << "[bench]   " << name << " test accuracy " << metrics.accuracy << "\n";
    }
    {
        Manifest m = dir_manifest("train", models_dir,
                                  {{"seed", std::to_string(seed)},
                                   {"dataset_config_hash", hex64(fnv1a64(ds_cfg.to_text()))},
                                   {"train_config_hash", hex64(fnv1a64(train_cfg.to_text()))}},
                                  model_files);
        write_manifest(m, models_dir);
        all.note_dir_files("models", model_files);
        all.note("models/manifest.json");
    }

    // --- policy replay sweep on the congested variant ----------------------
    const std::vector<double> sweep = options.quick ? std::vector<double>{0.5}
                                                    : std::vector<double>{0.3, 0.5, 0.7};
    std::vector<double> thetas = sweep;
    thetas.push_back(1.0);
    for (const double theta : thetas) {
        std::cerr << "[bench] replay theta=" << theta << "\n";
        PolicyConfig pc;
        pc.theta = theta;
        pc.horizon = ds_cfg.horizon;
        const ReplayResult rr = replay(congested_cfg, cnn_model, pc, threads);

        const std::string rel = "replay/theta_" + format_real(theta);
        const std::string dir = (fs::path(root) / rel).string();
        write_run_dir(rr.baseline, (fs::path(dir) / "baseline").string());
        write_run_dir(rr.policy, (fs::path(dir) / "policy").string());
        write_report_csv(rr.report, (fs::path(dir) / "report.csv").string());
        emit_delay_comparison(rr.report, (fs::path(dir) / "comparison.csv").string(),
                              ComparisonFormat::csv);
        emit_delay_comparison(rr.report, (fs::path(dir) / "comparison.svg").string(),
                              ComparisonFormat::svg);

        std::vector<std::string> files;
        std::vector<std::string> run_files = kTraceFiles;
        run_files.push_back("gt.csv");
        for (const auto& f : run_files) files.push_back("baseline/" + f);
        for (const auto& f : run_files) files.push_back("policy/" + f);
        files.insert(files.end(), {"report.csv", "comparison.csv", "comparison.svg"});
        Manifest m = dir_manifest(
            "replay", dir,
            {{"seed", std::to_string(seed)},
             {"theta", format_real(theta)},
             {"sim_config_hash", hex64(fnv1a64(congested_cfg.to_text()))},
             {"model", "cnn"}},
            files);
        write_manifest(m, dir);
        all.note_dir_files(rel, files);
        all.note(rel + "/manifest.json");

        const double ratio =
            safe_ratio(rr.report.policy.mean_delay_ms, rr.report.baseline.mean_delay_ms);
        if (theta < 1.0) {
            result.thetas.push_back(
                {theta, ratio, rr.report.policy.rejected_low, rr.report.policy.rejected_high});
            if (result.best_theta == 0.0 || ratio < result.best_mean_delay_ratio) {
                result.best_theta = theta;
                result.best_mean_delay_ratio = ratio;
            }
        } else {
            bool identical = true;
            for (const auto& f : run_files) {
                const std::string a =
                    read_text_file((fs::path(dir) / "baseline" / f).string());
                const std::string b = read_text_file((fs::path(dir) / "policy" / f).string());
                if (a != b) identical = false;
            }
            result.theta1_identical = identical;
        }
    }

    // --- summary ----------------------------------------------------------
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("examples", std::to_string(result.examples));
    rows.emplace_back("deterioration_fraction", format_real(result.deterioration_fraction));
    rows.emplace_back("bayes_accuracy", format_real(result.bayes_accuracy));
    for (const auto& a : result.algos)
        rows.emplace_back(std::string(model_kind_name(a.kind)) + "_test_accuracy",
                          format_real(a.test_accuracy));
    rows.emplace_back("best_baseline_accuracy", format_real(result.best_baseline_accuracy));
    rows.emplace_back("cluster_purity", format_real(result.cluster_purity));
    rows.emplace_back("leisure_weekend_over_weekday",
                      format_real(result.leisure_weekend_over_weekday));
    rows.emplace_back("work_weekend_over_weekday", format_real(result.work_weekend_over_weekday));
    for (const auto& t : result.thetas) {
        rows.emplace_back("theta_" + format_real(t.theta) + "_delay_ratio",
                          format_real(t.mean_delay_ratio));
        rows.emplace_back("theta_" + format_real(t.theta) + "_rejected_low",
                          std::to_string(t.rejected_low));
        rows.emplace_back("theta_" + format_real(t.theta) + "_rejected_high",
                          std::to_string(t.rejected_high));
    }
    rows.emplace_back("best_theta", format_real(result.best_theta));
    rows.emplace_back("best_theta_delay_ratio", format_real(result.best_mean_delay_ratio));
    rows.emplace_back("theta1_identical", result.theta1_identical ? "true" : "false");

    std::ostringstream csv, table;
    csv << "metric,value\n";
    table << "metric                               value\n";
    for (const auto& [k, v] : rows) {
        csv << k << "," << v << "\n";
        table << k;
        for (std::size_t i = k.size(); i < 37; ++i) table << ' ';
        table << v << "\n";
    }
    write_text_file((fs::path(root) / "summary.csv").string(), csv.str());
    all.note("summary.csv");
    result.summary_table = table.str();

    Manifest top;
    top.command = "bench";
    top.params = {{"seed", std::to_string(seed)},
                  {"quick", options.quick ? "true" : "false"},
                  {"sim_config_hash", hex64(fnv1a64(sim_cfg.to_text()))},
                  {"congested_config_hash", hex64(fnv1a64(congested_cfg.to_text()))},
                  {"dataset_config_hash", hex64(fnv1a64(ds_cfg.to_text()))},
                  {"train_config_hash", hex64(fnv1a64(train_cfg.to_text()))}};
    for (const auto& rel : all.rel_paths) add_artifact(top, root, rel);
    write_manifest(top, root);
    return result;
}

} // namespace netqos
