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

#include <iosfwd>
#include <string>
#include <vector>

#include "slimnet/data.hpp"
#include "slimnet/model_spec.hpp"
#include "slimnet/norm.hpp"
#include "slimnet/weights.hpp"

namespace slimnet {

struct TableRow {
    SubnetConfig config;
    double mflops = 0.0;
    double top1 = 0.0;  // in [0, 1]
};

struct QueryTable {
    std::vector<TableRow> rows;
    std::vector<double> width_grid;
    std::vector<int> resolution_grid;

    /// Every grid pair exactly once; MFLOPs strictly increasing in width per resolution.
    /// Throws InvalidArgument describing the first violation.
    void check_invariants() const;

    void write_csv(std::ostream& out) const;
    static QueryTable read_csv(std::istream& in, const std::string& origin = "<table>");
    void save(const std::string& path) const;
    static QueryTable load(const std::string& path);
};

/// lower, lower + step, ... up to 1.0 inclusive, rounded to 1e-4.
std::vector<double> width_grid(double lower, double step = 0.05);

struct TableOptions {
    int calibration_budget = kDefaultCalibrationBudget;
    int batch_size = 200;
    /// Calibrate configs missing from the bank; otherwise they raise CalibrationRequired.
    bool calibrate_missing = true;
};

/// Evaluates every (width, resolution) pair on `validation`, calibrating
/// missing configs on `calibration` (inserted into `bank`).
QueryTable build_table(const SlimmableModelSpec& spec, WeightStore& store, BNStatsBank& bank,
                       const Dataset* calibration, const Dataset& validation, const std::vector<double>& widths,
                       const std::vector<int>& resolutions, const TableOptions& options = {});

/// Most accurate row within `budget_mflops`; ties go to lower MFLOPs, then
/// lower resolution, then lower width. Throws InfeasibleBudget below the
/// cheapest row.
const TableRow& select_config(const QueryTable& table, double budget_mflops);

/// Pareto-optimal rows (no other row is at most as costly and strictly more
/// accurate), sorted by MFLOPs.
std::vector<TableRow> frontier(const QueryTable& table);

}  // namespace slimnet
