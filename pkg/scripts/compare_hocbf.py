#!/usr/bin/env python3
"""Sweep the HO-CBF penalty against the cone filter on one scenario.

For each gamma the scenario is run under both filters on identical geometry;
traces, phi'/phi curves, and a side-by-side report land under --out. The
printed table shows each filter's closest approach and the gap between them,
which should shrink as gamma approaches the typical closing speed."""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from coneguard.harness import compare
from coneguard.hocbf import HocbfConfig
from coneguard.scenarios import get_scenario
from coneguard.traceio import (
    comparison_text,
    load_scenario,
    write_phi_ratio,
    write_trace,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="moving-head-on")
    parser.add_argument("--config", help="scenario YAML instead of a built-in")
    parser.add_argument(
        "--gammas", type=float, nargs="+", default=[0.5, 1.0, 2.0]
    )
    parser.add_argument("--out", default="out/hocbf_sweep")
    args = parser.parse_args()

    base = load_scenario(args.config) if args.config else get_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    sections = []
    print(f"{'gamma':>6} {'c3bf':>10} {'hocbf':>10} {'|gap|':>10}")
    for gamma in args.gammas:
        report = compare(
            replace(base, filter_kind="c3bf"),
            replace(
                base, filter_kind="hocbf", hocbf=HocbfConfig(gamma_penalty=gamma)
            ),
        )
        tag = f"{gamma:g}".replace(".", "p")
        write_trace(out / "trace_c3bf.csv", report.trace_a)
        write_trace(out / f"trace_hocbf_gamma{tag}.csv", report.trace_b)
        write_phi_ratio(out / f"phi_ratio_gamma{tag}.csv", report)
        sections.append(comparison_text(report, gamma=gamma))
        gap = abs(
            report.metrics_b.min_separation - report.metrics_a.min_separation
        )
        print(
            f"{gamma:>6g} {report.metrics_a.min_separation:>+10.6f} "
            f"{report.metrics_b.min_separation:>+10.6f} {gap:>10.6f}"
        )
    (out / "compare.txt").write_text("\n".join(sections), newline="\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
