"""Desk-scale reproduction of the study grid: ERG and SBM, null and perturbed.

    python scripts/run_tables.py --out tables.csv --workers 4
"""
import argparse
import logging
import sys

from netmisfit.config import DEFAULT_SEED, LOG_FORMAT
from netmisfit.ergm import ErgMode
from netmisfit.montecarlo import ModelKind, ScenarioKind, ScenarioSpec, TestOptions, run_scenario, write_csv

ERG_SIZES = (50, 100, 200, 1000)
ERG_REPS = {50: 1000, 100: 1000, 200: 1000, 1000: 100}
SBM_CELLS = ((90, 3), (90, 6), (120, 4), (120, 6), (200, 4), (200, 10), (300, 3), (300, 10), (300, 30))
SBM_REPS = 100


def grid(seed: int, erg_mode: ErgMode, quick: bool):
    options = TestOptions(erg_mode=erg_mode, clamp=1e-6)
    for scenario in ScenarioKind:
        for n in ERG_SIZES:
            reps = 20 if quick else ERG_REPS[n]
            yield ScenarioSpec(model=ModelKind.ERG, scenario=scenario, n=n, replications=reps,
                               options=options, master_seed=seed)
    for scenario in ScenarioKind:
        for n, m in SBM_CELLS:
            reps = 5 if quick else SBM_REPS
            yield ScenarioSpec(model=ModelKind.SBM, scenario=scenario, n=n, m=m, replications=reps,
                               options=options, master_seed=seed)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="tables.csv")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--erg-mode", choices=[m.value for m in ErgMode], default=ErgMode.PAPER_LITERAL.value)
    parser.add_argument("--quick", action="store_true", help="a handful of replications per cell")
    args = parser.parse_args()
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format=LOG_FORMAT)

    summaries = [run_scenario(spec, workers=args.workers) for spec in grid(args.seed, ErgMode(args.erg_mode), args.quick)]
    write_csv(summaries, args.out)
    print(f"Wrote {len(summaries)} rows to {args.out}")


if __name__ == "__main__":
    main()
