#!/usr/bin/env python3
"""Run every built-in scenario and tabulate the safety metrics.

Writes one trace CSV and one metrics file per scenario under --out and
prints a summary table. Exit code 2 if any scenario ends unsafe."""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from coneguard.harness import compute_metrics, run, run_pair
from coneguard.scenarios import builtin_scenarios
from coneguard.traceio import metrics_text, write_trace


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--filter", choices=["none", "c3bf", "hocbf"], default="c3bf"
    )
    parser.add_argument("--out", default="out/scenarios")
    parser.add_argument("--dt", type=float, default=None)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_safe = True
    print(f"{'scenario':<16} {'min_sep':>10} {'duty':>6} {'rms':>8} {'time':>6}")
    for config in builtin_scenarios():
        config = replace(config, filter_kind=args.filter)
        if args.dt is not None:
            config = replace(config, dt=args.dt)
        t0 = time.perf_counter()
        if config.partner is not None:
            trace, partner_trace = run_pair(config)
            write_trace(out / f"{config.name}_partner.csv", partner_trace)
            all_safe = all_safe and compute_metrics(partner_trace).success
        else:
            trace = run(config)
        elapsed = time.perf_counter() - t0
        metrics = compute_metrics(trace)
        write_trace(out / f"{config.name}.csv", trace)
        (out / f"{config.name}_metrics.txt").write_text(
            metrics_text(config.name, config.filter_kind, metrics), newline="\n"
        )
        all_safe = all_safe and metrics.success
        print(
            f"{config.name:<16} {metrics.min_separation:>+10.6f} "
            f"{metrics.intervention_duty:>6.3f} {metrics.tracking_rms:>8.4f} "
            f"{elapsed:>5.1f}s"
        )
    return 0 if all_safe else 2


if __name__ == "__main__":
    sys.exit(main())
