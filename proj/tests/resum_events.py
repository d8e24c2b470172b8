#!/usr/bin/env python3
"""Recompute report totals of a run directory from events.jsonl and metrics.csv."""
import csv
import json
import math
import sys
from pathlib import Path


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main(run: Path) -> int:
    report = json.loads((run / "report.json").read_text())
    walkers = report["walkers"]
    prev = {w["id"]: w["start"]["global"] for w in walkers}
    length = {w["id"]: 0.0 for w in walkers}
    steps = {w["id"]: {} for w in walkers}
    for line in (run / "events.jsonl").read_text().splitlines():
        e = json.loads(line)
        g = e["global"]
        d = math.dist(prev[e["walker"]], g)
        length[e["walker"]] = math.fsum([length[e["walker"]], d])
        steps[e["walker"]][e["k"]] = d
        prev[e["walker"]] = g

    formed = {w["id"]: [] for w in walkers}
    removed = {w["id"]: [] for w in walkers}
    last_b = {w["id"]: 0.0 for w in walkers}
    errors = []
    with open(run / "metrics.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            w, k = int(row["walker"]), int(row["interval"])
            f = float(row["F_rate"])
            formed[w].append(f)
            removed[w].append(float(row["R_rate"]))
            last_b[w] = float(row["B"])
            if not close(f, steps[w].get(k, 0.0)):
                errors.append(f"walker {w} interval {k}: F_rate {f} != step {steps[w].get(k, 0.0)}")

    total_formed = total_removed = 0.0
    for w in walkers:
        i = w["id"]
        f, r = math.fsum(formed[i]), math.fsum(removed[i])
        total_formed += f
        total_removed += r
        checks = [("final_length", length[i]), ("formed", f), ("removed", r), ("backlog", f - r)]
        for key, want in checks:
            if not close(w[key], want):
                errors.append(f"walker {i}: {key} {w[key]} != {want}")
        if not close(last_b[i], f - r):
            errors.append(f"walker {i}: final B {last_b[i]} != {f - r}")
    if not close(report["removal"]["formed"], total_formed):
        errors.append("removal.formed mismatch")
    if not close(report["removal"]["removed"], total_removed):
        errors.append("removal.removed mismatch")
    for e in errors:
        print(e)
    print(f"{len(walkers)} walkers, {sum(len(s) for s in steps.values())} events, {len(errors)} mismatch(es)")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main(Path(sys.argv[1])))
