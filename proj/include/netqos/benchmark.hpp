#pragma once

#include "netqos/baselines.hpp"
#include "netqos/cnn.hpp"
#include "netqos/dataset.hpp"
#include "netqos/model.hpp"
#include "netqos/netsim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace netqos {

/// The standard synthetic benchmark: a 77-cell grid cycling
/// work/residential/leisure regions, 5 simulated days of 15-minute steps
/// starting on a Friday (so the span covers a full weekend), seed 42.
SimConfig benchmark_sim_config();

/// Stress variant of the standard benchmark: identical except for one event
/// tripling load on every work cell during the Monday 10:00-16:00 window.
SimConfig benchmark_congested_config();

/// Default example-building parameters (window 6, 4 neighbors, horizon 2,
/// deadband 0.10, 70/20/10 split).
DatasetConfig benchmark_dataset_config();

TrainConfig benchmark_train_config();
BaselineHyper benchmark_hyper();

/// Reduced grid and horizon for smoke runs; exercised by `bench --quick`.
SimConfig quick_sim_config();
SimConfig quick_congested_config();

struct BenchOptions {
    std::string out_dir;
    bool quick = false;
    int threads = 1;
};

struct ThetaOutcome {
    double theta = 1.0;
    double mean_delay_ratio = 1.0; // policy mean delay / baseline mean delay
    std::uint64_t rejected_low = 0;
    std::uint64_t rejected_high = 0;
};

struct AlgoOutcome {
    ModelKind kind = ModelKind::cnn;
    double test_accuracy = 0.0;
};

struct BenchResult {
    // classification benchmark
    double bayes_accuracy = 0.0;
    double deterioration_fraction = 0.0;
    std::size_t examples = 0;
    std::vector<AlgoOutcome> algos; // cnn, knn, svm, dt, gbm
    double cnn_accuracy = 0.0;
    double best_baseline_accuracy = 0.0;

    // cognition analysis
    double cluster_purity = 0.0;
    std::vector<double> cluster_inertia_history;
    double leisure_weekend_over_weekday = 0.0; // true-load means from ground truth
    double work_weekend_over_weekday = 0.0;

    // admission policy sweep on the congested variant
    std::vector<ThetaOutcome> thetas; // 0.3, 0.5, 0.7
    double best_theta = 0.0;
    double best_mean_delay_ratio = 1.0;
    bool theta1_identical = false; // theta=1 run byte-identical to its baseline

    std::string summary_table; // printable key/value table
};

/// Full pipeline: simulate -> analyze -> dataset -> train all five kinds ->
/// eval -> replay sweep, writing every artifact plus manifests under
/// options.out_dir. Progress goes to standard error.
BenchResult run_bench(const BenchOptions& options);

} // namespace netqos
