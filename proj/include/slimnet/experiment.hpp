/*
 * Copyright 2026 The slimnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slimnet/data.hpp"
#include "slimnet/planner.hpp"
#include "slimnet/trainer.hpp"

namespace slimnet {

/// Everything needed to reproduce one run. Parsed from JSON and validated
/// before any compute starts.
struct RunConfig {
    TrainMode mode = TrainMode::MutualNet;
    /// Built-in backbone name (cifar_mobilenet, mobilenet_v1) or a backbone description path.
    std::string backbone = "cifar_mobilenet";
    DatasetSource dataset;
    double width_lower = 0.25;
    double width_upper = 1.0;
    std::vector<int> resolutions{32, 28, 24, 20};
    int fixed_resolution = 0;
    double fixed_width = 1.0;
    Schedule schedule;
    AugmentOptions augment;
    std::uint64_t seed = 0;
    std::string output_dir = "run";
    int calibration_budget = kDefaultCalibrationBudget;
    bool calibration_augment = false;
    double width_step = 0.05;
    /// Table resolutions; empty means the training resolutions (or the fixed one for single-resolution modes).
    std::vector<int> table_resolutions;
    std::size_t val_samples_per_epoch = 0;
    bool force = false;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig load(const std::string& path);
    std::string to_json_text() const;

    /// Grids the query table is built on for this mode.
    std::vector<double> table_widths() const;
    std::vector<int> table_resolution_grid() const;
};

struct RunRecord {
    std::string config_json;
    std::vector<EpochMetrics> epochs;
    std::string checkpoint_path;
    std::string bank_path;
    std::string table_path;
    std::string frontier_path;
    double wall_clock_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string status = "ok";  // ok | failed
    std::string failed_stage;
    std::string error;

    std::string to_json_text() const;
    static RunRecord from_json_text(const std::string& text);
    static RunRecord load(const std::string& path);
};

/// Builds the backbone named by the config, sized for `num_classes`.
SlimmableModelSpec resolve_backbone(const RunConfig& config, int num_classes);

/// The training split, or a once-augmented copy of its first `calibration_budget`
/// images when config.calibration_augment is set.
Dataset calibration_stream(const RunConfig& config, const Dataset& train);

/// One calibrated entry per (width, resolution) pair.
BNStatsBank calibrate_grid(const SlimmableModelSpec& spec, WeightStore& store, const Dataset& stream,
                           const std::vector<double>& widths, const std::vector<int>& resolutions, int budget);

/// train -> calibrate -> table -> frontier, writing into config.output_dir:
/// metrics.csv, model.ckpt, bnstats.bin, table.csv, frontier.csv, record.json.
/// Failures are recorded in record.json with the stage name, then rethrown.
RunRecord run_experiment(const RunConfig& config);

/// Best accuracy reachable within `budget`, or nullopt when infeasible.
std::optional<double> best_within(const QueryTable& table, double budget);

struct Comparison {
    std::vector<std::string> labels;
    double shared_lo = 0.0;
    double shared_hi = 0.0;
    bool overlapping = false;
    std::vector<double> budgets;
    std::vector<std::vector<double>> accuracy;  // [method][budget]
    /// dominance[i][j]: fraction of budgets where i beats j, ties counting 1/2.
    std::vector<std::vector<double>> dominance;
    std::vector<std::string> warnings;
};

/// Aligns the tables on an evenly spaced budget grid over the shared FLOPs range.
Comparison compare_tables(const std::vector<QueryTable>& tables, const std::vector<std::string>& labels,
                          int grid_points = 101);

/// Mean accuracy gap (a - b) over the budgets in the lowest quartile of the shared range.
double low_quartile_gap(const Comparison& c, std::size_t a, std::size_t b);

/// comparison.csv, dominance.csv and curves.svg under `out_dir`.
void write_comparison(const Comparison& c, const std::vector<QueryTable>& tables, const std::string& out_dir,
                      bool force);

}  // namespace slimnet
