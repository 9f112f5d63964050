#!/usr/bin/env python3
"""Run the canonical benchmark experiments from configs/.

By default this launches the three classical test functions at full scale
(25 trials each), which takes a while; use --quick for a smoke-scale pass.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from gphedge.harness import emit, load_config, run_experiment

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "names",
        nargs="*",
        default=["branin", "hartman3", "hartman6"],
        help="config stems under configs/ (default: the classical functions)",
    )
    parser.add_argument("--quick", action="store_true", help="3 trials, 20 iterations")
    parser.add_argument("--out", default=None)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    failed = 0
    for name in args.names:
        overrides = {"output_dir": args.out}
        if args.quick:
            overrides.update(trials=3, iterations=20)
        config = load_config(CONFIG_DIR / f"{name}.yaml", **overrides)
        print(f"== {config.name}: {len(config.strategies)} strategies, "
              f"{config.trials} trials x {config.iterations} iterations")
        table = run_experiment(config, jobs=args.jobs)
        paths = emit(table)
        print(f"   wrote {paths['csv']}")
        failed += len(table.failures)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
