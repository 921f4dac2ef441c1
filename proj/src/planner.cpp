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

#include "slimnet/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "slimnet/calibration.hpp"
#include "slimnet/errors.hpp"
#include "slimnet/flops.hpp"
#include "slimnet/network.hpp"
#include "slimnet/trainer.hpp"

namespace slimnet {

std::vector<double> width_grid(double lower, double step) {
    WidthMultiplier checked(lower);
    if (!(step > 0.0)) throw InvalidArgument("width step must be positive");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double w = std::round((checked.value() + i * step) * 10000.0) / 10000.0;
        if (w > 1.0 + 1e-9) break;
        out.push_back(std::min(w, 1.0));
    }
    if (out.back() < 1.0 - 1e-9) out.push_back(1.0);
    return out;
}

void QueryTable::check_invariants() const {
    std::set<SubnetConfig> expected;
    for (double w : width_grid)
        for (int r : resolution_grid) expected.insert({WidthMultiplier(w), r});
    std::set<SubnetConfig> seen;
    for (const TableRow& row : rows) {
        if (!seen.insert(row.config).second) throw InvalidArgument("duplicate table row " + to_string(row.config));
        if (!expected.count(row.config)) throw InvalidArgument("row " + to_string(row.config) + " is off the grid");
        if (row.top1 < 0.0 || row.top1 > 1.0) throw InvalidArgument("accuracy outside [0, 1]");
    }
    if (seen.size() != expected.size()) throw InvalidArgument("table is missing grid configurations");
    for (int r : resolution_grid) {
        std::vector<const TableRow*> line;
        for (const TableRow& row : rows)
            if (row.config.resolution == r) line.push_back(&row);
        std::sort(line.begin(), line.end(), [](auto* a, auto* b) { return a->config.width < b->config.width; });
        for (std::size_t i = 1; i < line.size(); ++i) {
            if (!(line[i]->mflops > line[i - 1]->mflops)) {
                throw InvalidArgument("MFLOPs do not strictly increase from " + to_string(line[i - 1]->config) +
                                      " to " + to_string(line[i]->config));
            }
        }
    }
}

void QueryTable::write_csv(std::ostream& out) const {
    out << "width,resolution,mflops,top1\n";
    for (const TableRow& row : rows) {
        out << std::fixed << std::setprecision(4) << row.config.width.value() << ',' << row.config.resolution << ','
            << std::setprecision(6) << row.mflops << ',' << std::setprecision(6) << row.top1 << '\n';
    }
}

QueryTable QueryTable::read_csv(std::istream& in, const std::string& origin) {
    QueryTable t;
    std::string line;
    if (!std::getline(in, line) || line.rfind("width,resolution,mflops,top1", 0) != 0) {
        throw IngestionError(origin, "expected header 'width,resolution,mflops,top1'");
    }
    std::set<double> widths;
    std::set<int> resolutions;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream ls(line);
        std::string f[4];
        for (auto& s : f)
            if (!std::getline(ls, s, ',')) throw IngestionError(origin, "line " + std::to_string(line_no) + ": expected 4 fields");
        try {
            TableRow row;
            row.config.width = WidthMultiplier(std::stod(f[0]));
            row.config.resolution = std::stoi(f[1]);
            row.mflops = std::stod(f[2]);
            row.top1 = std::stod(f[3]);
            widths.insert(row.config.width.value());
            resolutions.insert(row.config.resolution);
            t.rows.push_back(row);
        } catch (const std::logic_error&) {
            throw IngestionError(origin, "line " + std::to_string(line_no) + ": malformed number");
        }
    }
    t.width_grid.assign(widths.begin(), widths.end());
    t.resolution_grid.assign(resolutions.rbegin(), resolutions.rend());
    return t;
}

void QueryTable::save(const std::string& path) const {
    detail::write_atomically(path, [&](std::ofstream& out) { write_csv(out); });
}

QueryTable QueryTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError(path, "cannot open query table");
    return read_csv(in, path);
}

QueryTable build_table(const SlimmableModelSpec& spec, WeightStore& store, BNStatsBank& bank,
                       const Dataset* calibration, const Dataset& validation, const std::vector<double>& widths,
                       const std::vector<int>& resolutions, const TableOptions& options) {
    if (widths.empty() || resolutions.empty()) throw InvalidArgument("table grids must be non-empty");
    QueryTable table;
    table.width_grid = widths;
    table.resolution_grid = resolutions;
    for (double w : widths) {
        const SubnetView view = materialize_subnet(spec, store, w);
        for (int r : resolutions) {
            const SubnetConfig config{WidthMultiplier(w), r};
            if (!bank.contains(config)) {
                if (!options.calibrate_missing || calibration == nullptr) {
                    throw CalibrationRequired("no statistics for " + to_string(config) + " and no calibration data");
                }
                bank.insert(calibrate(view, config, *calibration, options.calibration_budget));
            }
            TableRow row;
            row.config = config;
            row.mflops = network_cost(spec, config).mflops();
            row.top1 = evaluate_top1(view, bank.at(config), validation, r, options.batch_size);
            table.rows.push_back(row);
        }
    }
    return table;
}

const TableRow& select_config(const QueryTable& table, double budget) {
    const TableRow* best = nullptr;
    double cheapest = INFINITY;
    for (const TableRow& row : table.rows) {
        cheapest = std::min(cheapest, row.mflops);
        if (row.mflops > budget) continue;
        if (best == nullptr) {
            best = &row;
            continue;
        }
        const auto key = [](const TableRow& r) {
            return std::make_tuple(-r.top1, r.mflops, r.config.resolution, r.config.width.key());
        };
        if (key(row) < key(*best)) best = &row;
    }
    if (best == nullptr) {
        std::ostringstream os;
        os << "budget " << budget << " MFLOPs is below the cheapest configuration (" << cheapest << " MFLOPs)";
        throw InfeasibleBudget(os.str());
    }
    return *best;
}

std::vector<TableRow> frontier(const QueryTable& table) {
    std::vector<TableRow> sorted = table.rows;
    std::sort(sorted.begin(), sorted.end(), [](const TableRow& a, const TableRow& b) {
        return std::make_tuple(a.mflops, -a.top1, a.config.resolution, a.config.width.key()) <
               std::make_tuple(b.mflops, -b.top1, b.config.resolution, b.config.width.key());
    });
    std::vector<TableRow> out;
    double best_before = -INFINITY;  // best accuracy among strictly cheaper rows
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        double group_best = -INFINITY;
        while (j < sorted.size() && sorted[j].mflops == sorted[i].mflops) group_best = std::max(group_best, sorted[j++].top1);
        const double bar = std::max(best_before, group_best);
        for (std::size_t k = i; k < j; ++k)
            if (sorted[k].top1 >= bar) out.push_back(sorted[k]);
        best_before = bar;
        i = j;
    }
    return out;
}

}  // namespace slimnet
