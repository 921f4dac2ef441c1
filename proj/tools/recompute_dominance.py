#!/usr/bin/env python3
# Copyright 2026 The slimnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Recomputes the pairwise dominance matrix of `slimnet compare` from raw query tables.

Written against the documented comparison rules only, so it can check the C++
output independently:

  shared range  [max of per-table minimum MFLOPs, min of per-table maximum MFLOPs]
  budget k      lo + (hi - lo) * k / (N - 1), k = 0..N-1
  accuracy      best top-1 among rows with mflops <= budget
  dominance     fraction of budgets where row beats column, ties count 1/2

Usage:
  recompute_dominance.py TABLE.csv TABLE.csv [...] [--labels A B ...] [--grid N]
                         [--check dominance.csv]

Without --check the matrix is printed as CSV. With --check the exit status is 0
only when every entry equals the file's value exactly.
"""

import argparse
import csv
import sys


def read_table(path):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != ["width", "resolution", "mflops", "top1"]:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [(float(r["mflops"]), float(r["top1"])) for r in reader]


def dominance(tables, grid):
    lo = max(min(c for c, _ in t) for t in tables)
    hi = min(max(c for c, _ in t) for t in tables)
    if lo > hi:
        raise ValueError("FLOPs ranges do not overlap")
    budgets = [lo + (hi - lo) * k / (grid - 1) for k in range(grid)]
    acc = [[max(a for c, a in t if c <= b) for b in budgets] for t in tables]
    m = len(tables)
    out = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            wins = 0.0
            for x, y in zip(acc[i], acc[j]):
                wins += 1.0 if x > y else 0.5 if x == y else 0.0
            out[i][j] = wins / len(budgets)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("tables", nargs="+")
    ap.add_argument("--labels", nargs="+")
    ap.add_argument("--grid", type=int, default=101)
    ap.add_argument("--check")
    args = ap.parse_args()
    if len(args.tables) < 2:
        ap.error("need at least two tables")
    labels = args.labels or [f"t{i}" for i in range(len(args.tables))]
    if len(labels) != len(args.tables):
        ap.error("one label per table")
    matrix = dominance([read_table(p) for p in args.tables], args.grid)

    if not args.check:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["method"] + labels)
        for label, row in zip(labels, matrix):
            w.writerow([label] + [repr(v) for v in row])
        return 0

    with open(args.check, newline="") as f:
        rows = list(csv.reader(f))
    if rows[0] != ["method"] + labels:
        print(f"header mismatch: {rows[0]}", file=sys.stderr)
        return 1
    bad = 0
    for i, row in enumerate(rows[1:]):
        for j, text in enumerate(row[1:]):
            if float(text) != matrix[i][j]:
                print(f"{labels[i]} vs {labels[j]}: file {text}, recomputed {matrix[i][j]!r}", file=sys.stderr)
                bad += 1
    if len(rows) - 1 != len(labels):
        print("row count mismatch", file=sys.stderr)
        bad += 1
    print("dominance matches" if bad == 0 else f"{bad} mismatches")
    return 0 if bad == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
