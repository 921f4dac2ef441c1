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

// slimnet command-line interface.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure,
// 4 budget below every configuration in the table.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "slimnet/checkpoint.hpp"
#include "slimnet/errors.hpp"
#include "slimnet/experiment.hpp"
#include "slimnet/flops.hpp"

namespace fs = std::filesystem;
using namespace slimnet;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitInfeasible = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --set a.b=value patches the config JSON before validation. Values parse as
// JSON when they can, otherwise as strings.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    nlohmann::json j;
    try {
        j = path.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        const std::string value = o.substr(eq + 1);
        nlohmann::json v = nlohmann::json::parse(value, nullptr, false);
        if (v.is_discarded()) v = value;
        nlohmann::json* node = &j;
        std::stringstream keys(o.substr(0, eq));
        std::string key;
        std::vector<std::string> parts;
        while (std::getline(keys, key, '.')) parts.push_back(key);
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            node = &(*node)[parts[i]];
            if (!node->is_object() && !node->is_null()) throw ConfigError("override '" + o + "' descends into a non-object");
        }
        (*node)[parts.back()] = v;
    }
    return RunConfig::from_json_text(j.dump());
}

struct LoadedRun {
    RunRecord record;
    RunConfig config;
    Checkpoint checkpoint;
};

LoadedRun load_run(const std::string& dir) {
    RunRecord record = RunRecord::load((fs::path(dir) / "record.json").string());
    if (record.status != "ok") throw ConfigError(dir + ": run failed at stage '" + record.failed_stage + "'");
    RunConfig config = RunConfig::from_json_text(record.config_json);
    Checkpoint ckpt = load_checkpoint(record.checkpoint_path);
    return {std::move(record), std::move(config), std::move(ckpt)};
}

void guard_overwrite(const std::string& path, bool force) {
    if (fs::exists(path) && !force) throw ConfigError(path + " exists; pass --force to overwrite");
}

QueryTable load_table_arg(const std::string& arg) {
    if (fs::is_directory(arg)) return QueryTable::load(RunRecord::load((fs::path(arg) / "record.json").string()).table_path);
    if (fs::path(arg).extension() == ".json") return QueryTable::load(RunRecord::load(arg).table_path);
    return QueryTable::load(arg);
}

std::vector<double> parse_widths(const std::vector<double>& given, const SlimmableModelSpec& spec, double step) {
    return given.empty() ? width_grid(spec.width_lower_bound, step) : given;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slimmable width-resolution networks: training, calibration and budget planning"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool force = false;

    auto* train = app.add_subcommand("train", "Train, calibrate, build the query table and frontier for one run");
    train->add_option("-c,--config", config_path, "Run configuration (JSON)");
    train->add_option("--set", overrides, "Override a config key, e.g. --set schedule.epochs=3");
    train->add_flag("--force", force, "Overwrite an existing run directory");

    std::string run_dir;
    int budget_samples = -1;
    auto* calib = app.add_subcommand("calibrate", "Recompute normalization statistics for a trained run");
    calib->add_option("run", run_dir, "Run directory")->required();
    calib->add_option("--samples", budget_samples, "Calibration sample budget (default: the run's)");
    calib->add_flag("--force", force, "Overwrite bnstats.bin");

    auto* table = app.add_subcommand("table", "Rebuild the query table of a trained run from its statistics");
    table->add_option("run", run_dir, "Run directory")->required();
    table->add_flag("--force", force, "Overwrite table.csv and frontier.csv");

    std::string table_arg;
    double budget = 0.0;
    auto* plan = app.add_subcommand("plan", "Pick the most accurate configuration within a MFLOPs budget");
    plan->add_option("table", table_arg, "Query table CSV, run record or run directory")->required();
    plan->add_option("--budget", budget, "Budget in MFLOPs")->required();

    std::string out_path;
    auto* front = app.add_subcommand("frontier", "Print the accuracy-MFLOPs Pareto frontier as CSV");
    front->add_option("table", table_arg, "Query table CSV, run record or run directory")->required();
    front->add_option("-o,--out", out_path, "Write to a file instead of stdout");
    front->add_flag("--force", force, "Overwrite --out");

    std::vector<std::string> inputs;
    std::vector<std::string> labels;
    int grid_points = 101;
    auto* compare = app.add_subcommand("compare", "Align runs on a shared budget grid and count wins");
    compare->add_option("inputs", inputs, "Query table CSVs, run records or run directories")->required()->expected(2, -1);
    compare->add_option("--labels", labels, "One label per input (default: file names)");
    compare->add_option("-o,--out", out_path, "Output directory")->required();
    compare->add_option("--grid", grid_points, "Budget grid points")->check(CLI::Range(2, 100000));
    compare->add_flag("--force", force, "Overwrite existing outputs");

    std::string backbone = "cifar_mobilenet";
    int classes = 10;
    std::vector<double> widths;
    std::vector<int> resolutions;
    double step = 0.05;
    auto* flops = app.add_subcommand("flops", "Print the analytic MFLOPs grid of a backbone as CSV");
    flops->add_option("--backbone", backbone, "cifar_mobilenet, mobilenet_v1 or a backbone description file");
    flops->add_option("--classes", classes, "Classifier outputs")->check(CLI::PositiveNumber);
    flops->add_option("--widths", widths, "Width multipliers (default: grid from the backbone's lower bound)");
    flops->add_option("--resolutions", resolutions, "Resolutions (default: the backbone's)");
    flops->add_option("--step", step, "Width grid step")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*train) {
            RunConfig config = load_config(config_path, overrides);
            config.force = config.force || force;
            const RunRecord record = run_experiment(config);
            const QueryTable t = QueryTable::load((fs::path(config.output_dir) / record.table_path).string());
            std::cout << "run complete: " << t.rows.size() << " table rows in " << config.output_dir << " ("
                      << std::fixed << std::setprecision(1) << record.wall_clock_seconds << " s)\n";
        } else if (*calib) {
            LoadedRun run = load_run(run_dir);
            const int n = budget_samples > 0 ? budget_samples : run.config.calibration_budget;
            guard_overwrite(run.record.bank_path, force);
            const Dataset train_split = load_dataset(run.config.dataset, Split::Train);
            const BNStatsBank bank =
                calibrate_grid(run.checkpoint.spec, run.checkpoint.store, calibration_stream(run.config, train_split),
                               run.config.table_widths(), run.config.table_resolution_grid(), n);
            bank.save(run.record.bank_path, run.checkpoint.spec.hash());
            std::cout << "calibrated " << bank.size() << " configurations on " << n << " samples\n";
        } else if (*table) {
            LoadedRun run = load_run(run_dir);
            guard_overwrite(run.record.table_path, force);
            guard_overwrite(run.record.frontier_path, force);
            BNStatsBank bank = BNStatsBank::load(run.record.bank_path, run.checkpoint.spec.hash());
            const Dataset val = load_dataset(run.config.dataset, Split::Val);
            TableOptions opts;
            opts.calibrate_missing = false;
            const QueryTable t = build_table(run.checkpoint.spec, run.checkpoint.store, bank, nullptr, val,
                                             run.config.table_widths(), run.config.table_resolution_grid(), opts);
            t.save(run.record.table_path);
            QueryTable f;
            f.rows = frontier(t);
            f.save(run.record.frontier_path);
            std::cout << "table: " << t.rows.size() << " rows, frontier: " << f.rows.size() << " rows\n";
        } else if (*plan) {
            const QueryTable t = load_table_arg(table_arg);
            const TableRow& row = select_config(t, budget);
            std::cout << std::fixed << std::setprecision(4) << "width=" << row.config.width.value()
                      << " resolution=" << row.config.resolution << std::setprecision(3) << " mflops=" << row.mflops
                      << std::setprecision(4) << " top1=" << row.top1 << '\n';
        } else if (*front) {
            QueryTable f;
            f.rows = frontier(load_table_arg(table_arg));
            if (out_path.empty()) {
                f.write_csv(std::cout);
            } else {
                guard_overwrite(out_path, force);
                f.save(out_path);
            }
        } else if (*compare) {
            if (!labels.empty() && labels.size() != inputs.size()) throw ConfigError("--labels needs one label per input");
            std::vector<QueryTable> tables;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                tables.push_back(load_table_arg(inputs[i]));
                if (labels.size() < inputs.size()) labels.push_back(fs::path(inputs[i]).filename().string());
            }
            const Comparison c = compare_tables(tables, labels, grid_points);
            for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';
            write_comparison(c, tables, out_path, force);
            std::cout << std::fixed << std::setprecision(3);
            for (std::size_t i = 0; i < c.labels.size(); ++i) {
                std::cout << c.labels[i];
                for (std::size_t j = 0; j < c.labels.size(); ++j) std::cout << ' ' << c.dominance[i][j];
                std::cout << '\n';
            }
        } else if (*flops) {
            SlimmableModelSpec spec;
            if (backbone == "cifar_mobilenet") spec = cifar_mobilenet_spec(classes);
            else if (backbone == "mobilenet_v1") spec = mobilenet_v1_spec(classes);
            else if (!fs::is_regular_file(backbone)) throw ConfigError("unknown backbone '" + backbone + "'");
            else spec = SlimmableModelSpec::load(backbone);
            write_flops_grid(std::cout, spec, parse_widths(widths, spec, step),
                             resolutions.empty() ? spec.resolutions.values() : resolutions);
        }
    } catch (const InfeasibleBudget& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConstraintViolation& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
