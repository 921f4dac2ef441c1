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

#include "slimnet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "slimnet/calibration.hpp"
#include "slimnet/checkpoint.hpp"
#include "slimnet/errors.hpp"
#include "slimnet/flops.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace slimnet {

namespace {

// Minimal schema: every object lists its allowed keys and their JSON types.
enum class Kind { Int, Number, Bool, String, IntArray, Object };

struct Field {
    const char* key;
    Kind kind;
};

void check_object(const json& j, const std::string& where, std::initializer_list<Field> fields) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const Field* f = nullptr;
        for (const Field& cand : fields)
            if (it.key() == cand.key) f = &cand;
        if (f == nullptr) throw ConfigError(where + ": unknown key '" + it.key() + "'");
        const json& v = it.value();
        bool ok = false;
        switch (f->kind) {
            case Kind::Int: ok = v.is_number_integer(); break;
            case Kind::Number: ok = v.is_number(); break;
            case Kind::Bool: ok = v.is_boolean(); break;
            case Kind::String: ok = v.is_string(); break;
            case Kind::Object: ok = v.is_object(); break;
            case Kind::IntArray:
                ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
                break;
        }
        if (!ok) throw ConfigError(where + "." + it.key() + ": wrong type");
    }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_object(j, "config",
                 {{"mode", Kind::String}, {"backbone", Kind::String}, {"dataset", Kind::Object}, {"width", Kind::Object},
                  {"resolutions", Kind::IntArray}, {"fixed_resolution", Kind::Int}, {"fixed_width", Kind::Number},
                  {"schedule", Kind::Object}, {"augment", Kind::Object}, {"seed", Kind::Int},
                  {"output_dir", Kind::String}, {"calibration", Kind::Object}, {"table", Kind::Object},
                  {"val_samples_per_epoch", Kind::Int}, {"force", Kind::Bool}});
    RunConfig c;
    try {
        if (!j.contains("mode")) throw ConfigError("config: 'mode' is required");
        c.mode = parse_train_mode(j.at("mode").get<std::string>());
        take(j, "backbone", c.backbone);
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            check_object(d, "dataset",
                         {{"name", Kind::String}, {"root", Kind::String}, {"val_size", Kind::Int},
                          {"train_limit", Kind::Int}, {"test_limit", Kind::Int}, {"side", Kind::Int},
                          {"synthetic_classes", Kind::Int}, {"synthetic_train", Kind::Int}, {"synthetic_test", Kind::Int}});
            take(d, "name", c.dataset.name);
            take(d, "root", c.dataset.root);
            take(d, "val_size", c.dataset.val_size);
            take(d, "train_limit", c.dataset.train_limit);
            take(d, "test_limit", c.dataset.test_limit);
            take(d, "side", c.dataset.side);
            take(d, "synthetic_classes", c.dataset.synthetic_classes);
            take(d, "synthetic_train", c.dataset.synthetic_train);
            take(d, "synthetic_test", c.dataset.synthetic_test);
        }
        if (j.contains("width")) {
            const json& w = j.at("width");
            check_object(w, "width", {{"lower", Kind::Number}, {"upper", Kind::Number}});
            take(w, "lower", c.width_lower);
            take(w, "upper", c.width_upper);
        }
        take(j, "resolutions", c.resolutions);
        take(j, "fixed_resolution", c.fixed_resolution);
        take(j, "fixed_width", c.fixed_width);
        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            check_object(s, "schedule",
                         {{"epochs", Kind::Int}, {"batch_size", Kind::Int}, {"lr", Kind::Number},
                          {"momentum", Kind::Number}, {"weight_decay", Kind::Number}, {"nesterov", Kind::Bool}});
            take(s, "epochs", c.schedule.epochs);
            take(s, "batch_size", c.schedule.batch_size);
            take(s, "lr", c.schedule.lr);
            take(s, "momentum", c.schedule.momentum);
            take(s, "weight_decay", c.schedule.weight_decay);
            take(s, "nesterov", c.schedule.nesterov);
        }
        if (j.contains("augment")) {
            const json& a = j.at("augment");
            check_object(a, "augment", {{"enabled", Kind::Bool}, {"pad", Kind::Int}, {"flip", Kind::Bool}});
            take(a, "enabled", c.augment.enabled);
            take(a, "pad", c.augment.pad);
            take(a, "flip", c.augment.flip);
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        take(j, "output_dir", c.output_dir);
        if (j.contains("calibration")) {
            const json& cal = j.at("calibration");
            check_object(cal, "calibration", {{"budget", Kind::Int}, {"augment", Kind::Bool}});
            take(cal, "budget", c.calibration_budget);
            take(cal, "augment", c.calibration_augment);
        }
        if (j.contains("table")) {
            const json& t = j.at("table");
            check_object(t, "table", {{"width_step", Kind::Number}, {"resolutions", Kind::IntArray}});
            take(t, "width_step", c.width_step);
            take(t, "resolutions", c.table_resolutions);
        }
        take(j, "val_samples_per_epoch", c.val_samples_per_epoch);
        take(j, "force", c.force);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    // Semantic checks.
    if (!(c.width_lower > 0.0 && c.width_lower <= 1.0)) throw ConfigError("width.lower must lie in (0, 1]");
    if (std::abs(c.width_upper - 1.0) > 1e-9) throw ConfigError("width.upper must be 1.0 (the full network)");
    const bool sandwich = c.mode == TrainMode::MutualNet || c.mode == TrainMode::USNetBaseline ||
                          c.mode == TrainMode::MultiscaleAugUSNet;
    if (sandwich && !(c.width_lower < 1.0)) throw ConfigError("sandwich modes need width.lower < 1");
    if (!(c.fixed_width > 0.0 && c.fixed_width <= 1.0)) throw ConfigError("fixed_width must lie in (0, 1]");
    if (c.resolutions.empty()) throw ConfigError("resolutions must be non-empty");
    try {
        ResolutionSet rs(c.resolutions);
        if (!c.table_resolutions.empty()) ResolutionSet trs(c.table_resolutions);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("resolutions: ") + e.what());
    }
    if (c.fixed_resolution < 0) throw ConfigError("fixed_resolution must be positive");
    if (c.schedule.epochs < 0 || c.schedule.batch_size < 2 || c.schedule.lr < 0.0) {
        throw ConfigError("schedule needs epochs >= 0, batch_size >= 2, lr >= 0");
    }
    if (c.calibration_budget < 1) throw ConfigError("calibration.budget must be >= 1");
    if (!(c.width_step > 0.0)) throw ConfigError("table.width_step must be positive");
    if (c.output_dir.empty()) throw ConfigError("output_dir must be set");
    static const std::set<std::string> datasets{"cifar10", "cifar100", "folder", "synthetic"};
    if (!datasets.count(c.dataset.name)) throw ConfigError("dataset.name must be cifar10, cifar100, folder or synthetic");
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    j["mode"] = to_string(mode);
    j["backbone"] = backbone;
    j["dataset"] = {{"name", dataset.name},           {"root", dataset.root},
                    {"val_size", dataset.val_size},   {"train_limit", dataset.train_limit},
                    {"test_limit", dataset.test_limit}, {"side", dataset.side},
                    {"synthetic_classes", dataset.synthetic_classes}, {"synthetic_train", dataset.synthetic_train},
                    {"synthetic_test", dataset.synthetic_test}};
    j["width"] = {{"lower", width_lower}, {"upper", width_upper}};
    j["resolutions"] = resolutions;
    j["fixed_resolution"] = fixed_resolution;
    j["fixed_width"] = fixed_width;
    j["schedule"] = {{"epochs", schedule.epochs},     {"batch_size", schedule.batch_size},
                     {"lr", schedule.lr},             {"momentum", schedule.momentum},
                     {"weight_decay", schedule.weight_decay}, {"nesterov", schedule.nesterov}};
    j["augment"] = {{"enabled", augment.enabled}, {"pad", augment.pad}, {"flip", augment.flip}};
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["calibration"] = {{"budget", calibration_budget}, {"augment", calibration_augment}};
    j["table"] = {{"width_step", width_step}, {"resolutions", table_resolutions}};
    j["val_samples_per_epoch"] = val_samples_per_epoch;
    j["force"] = force;
    return j.dump(2);
}

std::vector<double> RunConfig::table_widths() const {
    switch (mode) {
        case TrainMode::Independent: return {fixed_width};
        case TrainMode::MultiscaleAugSingle: return {1.0};
        default: return width_grid(width_lower, width_step);
    }
}

std::vector<int> RunConfig::table_resolution_grid() const {
    if (!table_resolutions.empty()) return ResolutionSet(table_resolutions).values();
    const int fixed = fixed_resolution > 0 ? fixed_resolution : ResolutionSet(resolutions).max();
    switch (mode) {
        case TrainMode::Independent:
        case TrainMode::USNetBaseline: return {fixed};
        default: return ResolutionSet(resolutions).values();
    }
}

namespace {

json epoch_json(const EpochMetrics& m) {
    return {{"epoch", m.epoch}, {"loss_full", m.loss_full}, {"loss_sub", m.loss_sub}, {"total", m.total},
            {"train_top1", m.train_top1}, {"val_top1", m.val_top1}, {"lr", m.lr}, {"seconds", m.seconds}};
}

}  // namespace

std::string RunRecord::to_json_text() const {
    json j;
    j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    j["epochs"] = json::array();
    for (const EpochMetrics& m : epochs) j["epochs"].push_back(epoch_json(m));
    j["checkpoint"] = checkpoint_path;
    j["bn_stats"] = bank_path;
    j["table"] = table_path;
    j["frontier"] = frontier_path;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["seed"] = seed;
    j["status"] = status;
    if (status != "ok") {
        j["failed_stage"] = failed_stage;
        j["error"] = error;
    }
    return j.dump(2);
}

RunRecord RunRecord::from_json_text(const std::string& text) {
    RunRecord r;
    try {
        const json j = json::parse(text);
        r.config_json = j.at("config").dump();
        for (const json& e : j.at("epochs")) {
            EpochMetrics m;
            m.epoch = e.at("epoch").get<int>();
            m.loss_full = e.at("loss_full").get<double>();
            m.loss_sub = e.at("loss_sub").get<double>();
            m.total = e.at("total").get<double>();
            m.train_top1 = e.at("train_top1").get<double>();
            m.val_top1 = e.at("val_top1").get<double>();
            m.lr = e.at("lr").get<double>();
            m.seconds = e.at("seconds").get<double>();
            r.epochs.push_back(m);
        }
        r.checkpoint_path = j.value("checkpoint", "");
        r.bank_path = j.value("bn_stats", "");
        r.table_path = j.value("table", "");
        r.frontier_path = j.value("frontier", "");
        r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
        r.seed = j.value("seed", std::uint64_t{0});
        r.status = j.value("status", "ok");
        r.failed_stage = j.value("failed_stage", "");
        r.error = j.value("error", "");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run record: ") + e.what());
    }
    return r;
}

RunRecord RunRecord::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError(path, "cannot open run record");
    std::stringstream ss;
    ss << in.rdbuf();
    RunRecord r = from_json_text(ss.str());
    // Relative artifact paths resolve against the record's directory.
    const fs::path dir = fs::path(path).parent_path();
    for (std::string* p : {&r.checkpoint_path, &r.bank_path, &r.table_path, &r.frontier_path}) {
        if (!p->empty() && fs::path(*p).is_relative()) *p = (dir / *p).string();
    }
    return r;
}

SlimmableModelSpec resolve_backbone(const RunConfig& config, int num_classes) {
    SlimmableModelSpec spec;
    if (config.backbone == "cifar_mobilenet") {
        spec = cifar_mobilenet_spec(num_classes);
    } else if (config.backbone == "mobilenet_v1") {
        spec = mobilenet_v1_spec(num_classes);
    } else {
        if (!fs::is_regular_file(config.backbone)) throw ConfigError("unknown backbone '" + config.backbone + "'");
        spec = SlimmableModelSpec::load(config.backbone);
        if (spec.num_classes != num_classes) {
            throw ConfigError("backbone '" + config.backbone + "' has " + std::to_string(spec.num_classes) +
                              " classes but the dataset has " + std::to_string(num_classes));
        }
    }
    spec.resolutions = ResolutionSet(config.resolutions);
    const bool sandwich = config.mode == TrainMode::MutualNet || config.mode == TrainMode::USNetBaseline ||
                          config.mode == TrainMode::MultiscaleAugUSNet;
    spec.width_lower_bound = sandwich ? config.width_lower : std::min(config.width_lower, config.fixed_width);
    spec.validate();
    return spec;
}

Dataset calibration_stream(const RunConfig& config, const Dataset& train) {
    if (!config.calibration_augment) return train;
    std::mt19937_64 rng(config.seed ^ 0xca1bull);
    std::vector<std::size_t> idx(std::min<std::size_t>(train.size(), config.calibration_budget));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Augmented crops are baked back into uint8 so calibrate() sees a plain stream.
    const Batch b = prepare_base_batch(train, idx, train.side, config.augment, rng);
    Dataset calib = train.subset(idx);
    const std::size_t plane = static_cast<std::size_t>(train.side) * train.side;
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int c = 0; c < train.channels; ++c)
            for (std::size_t k = 0; k < plane; ++k) {
                const std::size_t at = (i * train.channels + c) * plane + k;
                const float v = b.images.data[at] * train.stddev[c % 3] + train.mean[c % 3];
                calib.pixels[at] = static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0f), 0L, 255L));
            }
    return calib;
}

BNStatsBank calibrate_grid(const SlimmableModelSpec& spec, WeightStore& store, const Dataset& stream,
                           const std::vector<double>& widths, const std::vector<int>& resolutions, int budget) {
    BNStatsBank bank;
    bank.calibration_sample_budget = budget;
    for (double w : widths) {
        const SubnetView view = materialize_subnet(spec, store, w);
        for (int r : resolutions) bank.insert(calibrate(view, {WidthMultiplier(w), r}, stream, budget));
    }
    return bank;
}

RunRecord run_experiment(const RunConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out(config.output_dir);
    RunRecord record;
    record.config_json = config.to_json_text();
    record.seed = config.seed;
    std::string stage = "config";
    const fs::path record_path = out / "record.json";
    auto write_record = [&] {
        record.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        detail::write_atomically(record_path.string(), [&](std::ofstream& f) { f << record.to_json_text() << '\n'; });
    };
    if (fs::exists(record_path) && !config.force) {
        throw ConfigError("output directory '" + out.string() + "' already holds a run; pass force to overwrite");
    }
    fs::create_directories(out);
    try {
        stage = "data";
        const Dataset train = load_dataset(config.dataset, Split::Train);
        const Dataset val = load_dataset(config.dataset, Split::Val);

        stage = "config";
        const SlimmableModelSpec spec = resolve_backbone(config, train.num_classes);
        {
            std::ofstream f(out / "backbone.txt");
            f << spec.to_text();
        }

        stage = "train";
        TrainOptions opts;
        opts.mode = config.mode;
        opts.width_lower_bound = config.width_lower;
        opts.resolutions = ResolutionSet(config.resolutions);
        opts.fixed_resolution = config.fixed_resolution;
        opts.fixed_width = config.fixed_width;
        opts.schedule = config.schedule;
        opts.augment = config.augment;
        opts.seed = config.seed;
        opts.val_samples = config.val_samples_per_epoch;
        std::ofstream metrics(out / "metrics.csv", std::ios::trunc);
        metrics << "epoch,loss_full,loss_sub,total,train_top1,val_top1,lr,seconds\n";
        opts.on_epoch = [&](const EpochMetrics& m) {
            metrics << m.epoch << ',' << std::setprecision(8) << m.loss_full << ',' << m.loss_sub << ',' << m.total << ','
                    << m.train_top1 << ',' << m.val_top1 << ',' << m.lr << ',' << m.seconds << '\n';
            metrics.flush();
            record.epochs.push_back(m);
        };
        TrainResult trained = run_training(spec, train, &val, opts);
        record.checkpoint_path = "model.ckpt";
        save_checkpoint((out / record.checkpoint_path).string(), spec, trained.store);

        stage = "calibrate";
        const auto widths = config.table_widths();
        const auto resolutions = config.table_resolution_grid();
        BNStatsBank bank = calibrate_grid(spec, trained.store, calibration_stream(config, train), widths,
                                          resolutions, config.calibration_budget);
        record.bank_path = "bnstats.bin";
        bank.save((out / record.bank_path).string(), spec.hash());

        stage = "table";
        TableOptions topts;
        topts.calibration_budget = config.calibration_budget;
        topts.calibrate_missing = false;
        const QueryTable table = build_table(spec, trained.store, bank, nullptr, val, widths, resolutions, topts);
        record.table_path = "table.csv";
        table.save((out / record.table_path).string());

        stage = "frontier";
        QueryTable front;
        front.rows = frontier(table);
        record.frontier_path = "frontier.csv";
        front.save((out / record.frontier_path).string());
    } catch (const std::exception& e) {
        record.status = "failed";
        record.failed_stage = stage;
        record.error = e.what();
        write_record();
        throw;
    }
    write_record();
    return record;
}

std::optional<double> best_within(const QueryTable& table, double budget) {
    std::optional<double> best;
    for (const TableRow& r : table.rows) {
        if (r.mflops <= budget && (!best || r.top1 > *best)) best = r.top1;
    }
    return best;
}

Comparison compare_tables(const std::vector<QueryTable>& tables, const std::vector<std::string>& labels,
                          int grid_points) {
    if (tables.size() < 2) throw InvalidArgument("comparison needs at least two tables");
    if (labels.size() != tables.size()) throw InvalidArgument("one label per table");
    if (grid_points < 2) throw InvalidArgument("budget grid needs at least two points");
    Comparison c;
    c.labels = labels;
    c.shared_lo = -INFINITY;
    c.shared_hi = INFINITY;
    for (const QueryTable& t : tables) {
        if (t.rows.empty()) throw InvalidArgument("cannot compare an empty table");
        double lo = INFINITY, hi = -INFINITY;
        for (const TableRow& r : t.rows) {
            lo = std::min(lo, r.mflops);
            hi = std::max(hi, r.mflops);
        }
        c.shared_lo = std::max(c.shared_lo, lo);
        c.shared_hi = std::min(c.shared_hi, hi);
    }
    c.overlapping = c.shared_lo <= c.shared_hi;
    const std::size_t m = tables.size();
    c.accuracy.assign(m, {});
    c.dominance.assign(m, std::vector<double>(m, 0.0));
    if (!c.overlapping) {
        c.warnings.push_back("FLOPs ranges do not overlap; only per-method frontiers are exported");
        return c;
    }
    for (int k = 0; k < grid_points; ++k) {
        c.budgets.push_back(c.shared_lo + (c.shared_hi - c.shared_lo) * k / (grid_points - 1));
    }
    for (std::size_t i = 0; i < m; ++i)
        for (double b : c.budgets) c.accuracy[i].push_back(best_within(tables[i], b).value());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double wins = 0.0;
            for (std::size_t k = 0; k < c.budgets.size(); ++k) {
                if (c.accuracy[i][k] > c.accuracy[j][k]) wins += 1.0;
                else if (c.accuracy[i][k] == c.accuracy[j][k]) wins += 0.5;
            }
            c.dominance[i][j] = wins / static_cast<double>(c.budgets.size());
        }
    }
    return c;
}

double low_quartile_gap(const Comparison& c, std::size_t a, std::size_t b) {
    if (!c.overlapping) throw InvalidArgument("tables do not share a FLOPs range");
    const double cut = c.shared_lo + 0.25 * (c.shared_hi - c.shared_lo);
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < c.budgets.size(); ++k) {
        if (c.budgets[k] > cut) break;
        sum += c.accuracy[a][k] - c.accuracy[b][k];
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

namespace {

std::string svg_curves(const std::vector<QueryTable>& tables, const std::vector<std::string>& labels) {
    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    std::vector<std::vector<TableRow>> fronts;
    for (const QueryTable& t : tables) {
        fronts.push_back(frontier(t));
        for (const TableRow& r : fronts.back()) {
            x0 = std::min(x0, r.mflops);
            x1 = std::max(x1, r.mflops);
            y0 = std::min(y0, r.top1);
            y1 = std::max(y1, r.top1);
        }
    }
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 0.01;
    const double W = 640, H = 420, L = 60, B = 40, T = 20, R = 20;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - B - T); };
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" font-size=\"12\" text-anchor=\"middle\">MFLOPs ("
       << x0 << " - " << x1 << ")</text>\n";
    os << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
       << ")\" text-anchor=\"middle\">top-1 (" << y0 * 100 << "% - " << y1 * 100 << "%)</text>\n";
    for (std::size_t i = 0; i < fronts.size(); ++i) {
        const char* col = colors[i % 6];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
        for (const TableRow& r : fronts[i]) os << px(r.mflops) << ',' << py(r.top1) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 * (i + 1) << "\" font-size=\"12\" fill=\"" << col << "\">"
           << labels[i] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

void write_comparison(const Comparison& c, const std::vector<QueryTable>& tables, const std::string& out_dir,
                      bool force) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    for (const char* name : {"comparison.csv", "dominance.csv", "curves.svg"}) {
        if (fs::exists(out / name) && !force) {
            throw ConfigError((out / name).string() + " exists; pass --force to overwrite");
        }
    }
    detail::write_atomically((out / "comparison.csv").string(), [&](std::ofstream& f) {
        f << "budget_mflops";
        for (const auto& l : c.labels) f << ',' << l;
        f << '\n' << std::setprecision(17);
        for (std::size_t k = 0; k < c.budgets.size(); ++k) {
            f << c.budgets[k];
            for (std::size_t i = 0; i < c.labels.size(); ++i) f << ',' << c.accuracy[i][k];
            f << '\n';
        }
    });
    detail::write_atomically((out / "dominance.csv").string(), [&](std::ofstream& f) {
        f << "method";
        for (const auto& l : c.labels) f << ',' << l;
        f << '\n' << std::setprecision(17);
        for (std::size_t i = 0; i < c.labels.size(); ++i) {
            f << c.labels[i];
            for (std::size_t j = 0; j < c.labels.size(); ++j) f << ',' << c.dominance[i][j];
            f << '\n';
        }
    });
    detail::write_atomically((out / "curves.svg").string(), [&](std::ofstream& f) { f << svg_curves(tables, c.labels); });
}

}  // namespace slimnet
